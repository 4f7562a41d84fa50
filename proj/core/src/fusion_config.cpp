#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "selfcare/errors.hpp"
#include "selfcare/pipeline.hpp"

namespace selfcare::fusion {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

std::vector<double> to_vector(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Shortest text that parses back to the same double.
std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + number(v[i]);
  return out;
}

}  // namespace

std::string_view to_string(LateFusion f) {
  switch (f) {
    case LateFusion::Hard: return "hard";
    case LateFusion::Soft: return "soft";
    case LateFusion::Kalman: return "kalman";
  }
  return "?";
}

std::string_view to_string(GatingLoss g) { return g == GatingLoss::InSample ? "in_sample" : "held_out"; }

std::optional<LateFusion> parse_late_fusion(std::string_view name) {
  const auto n = lower(std::string(name));
  if (n == "hard") return LateFusion::Hard;
  if (n == "soft") return LateFusion::Soft;
  if (n == "kalman") return LateFusion::Kalman;
  return std::nullopt;
}

std::vector<BranchSpec> FusionConfig::branches() const {
  std::vector<BranchSpec> out;
  for (const auto& id : shortlist) {
    auto b = find_branch(id);
    b.family = family;
    out.push_back(std::move(b));
  }
  return out;
}

void FusionConfig::validate() const {
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  if (shortlist.empty()) throw ConfigError("shortlist must name at least one branch");
  std::set<std::string> seen;
  for (const auto& id : shortlist) {
    if (!seen.insert(id).second) throw ConfigError("shortlist repeats branch " + id);
    if (find_branch(id).device != device) throw ConfigError("branch " + id + " belongs to another device");
  }
  const auto sensors = device_sensors(device);
  if (std::find(sensors.begin(), sensors.end(), context) == sensors.end()) {
    throw ConfigError("context sensor " + std::string(to_string(context)) + " is not on the " +
                      std::string(to_string(device)));
  }
  if (kalman.dim() != static_cast<std::size_t>(n_classes())) {
    throw ConfigError("x0 has " + std::to_string(kalman.dim()) + " entries for a " + std::to_string(n_classes()) +
                      "-class task");
  }
  kalman.validate();
}

FusionConfig FusionConfig::parse(std::istream& in, const std::string& origin) {
  FusionConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const auto key = lower(trim(std::string_view(body).substr(0, eq)));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");
    try {
      if (key == "device") {
        auto d = parse_device(lower(value));
        if (!d) fail("unknown device '" + value + "'");
        cfg.device = *d;
      } else if (key == "task") {
        const double t = to_double(key, value);
        if (t != 2.0 && t != 3.0) fail("task must be 2 or 3");
        cfg.task = t == 2.0 ? Task::TwoClass : Task::ThreeClass;
      } else if (key == "delta") {
        cfg.delta = to_double(key, value);
      } else if (key == "family") {
        auto f = learners::parse_family(value);
        if (!f) fail("unknown family '" + value + "'");
        cfg.family = *f;
      } else if (key == "shortlist") {
        cfg.shortlist = split_list(value);
      } else if (key == "context") {
        auto s = parse_sensor(value);
        if (!s) fail("unknown sensor '" + value + "'");
        cfg.context = *s;
      } else if (key == "fusion") {
        auto f = parse_late_fusion(value);
        if (!f) fail("fusion must be hard, soft or kalman");
        cfg.fusion = *f;
      } else if (key == "gating_loss") {
        const auto v = lower(value);
        if (v == "in_sample") cfg.gating_loss = GatingLoss::InSample;
        else if (v == "held_out") cfg.gating_loss = GatingLoss::HeldOut;
        else fail("gating_loss must be in_sample or held_out");
      } else if (key == "x0") {
        cfg.kalman.x0 = to_vector(key, value);
      } else if (key == "p0_scale") {
        cfg.kalman.p0_scale = to_double(key, value);
      } else if (key == "q_variance") {
        cfg.kalman.q_variance = to_double(key, value);
      } else if (key == "q_model") {
        const auto v = lower(value);
        if (v == "diagonal") cfg.kalman.q_model = ProcessNoise::Diagonal;
        else if (v == "discrete_white_noise") cfg.kalman.q_model = ProcessNoise::DiscreteWhiteNoise;
        else fail("q_model must be diagonal or discrete_white_noise");
      } else if (key == "epsilon") {
        cfg.kalman.epsilon = to_double(key, value);
      } else if (key == "gamma") {
        cfg.kalman.gamma = to_vector(key, value);
      } else if (key == "r_map") {
        const auto v = lower(value);
        if (v == "double") cfg.kalman.r_map = NoiseMap::Double;
        else if (v == "half") cfg.kalman.r_map = NoiseMap::Half;
        else if (v == "constant") cfg.kalman.r_map = NoiseMap::Constant;
        else fail("r_map must be double, half or constant");
      } else if (key == "r_constant") {
        cfg.kalman.r_constant = to_double(key, value);
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(origin, 0) == 0) throw;
      fail(msg);
    }
  }
  for (const char* required : {"device", "task", "shortlist", "x0"}) {
    if (!seen.contains(required)) throw ConfigError(origin + ": missing key '" + required + "'");
  }
  if (!seen.contains("context")) cfg.context = default_context_sensor(cfg.device);
  cfg.validate();
  return cfg;
}

FusionConfig FusionConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open fusion config " + file.string());
  return parse(in, file.string());
}

void FusionConfig::write(std::ostream& out) const {
  out << "device = " << to_string(device) << '\n';
  out << "task = " << n_classes() << '\n';
  out << "delta = " << number(delta) << '\n';
  out << "family = " << learners::to_string(family) << '\n';
  out << "shortlist = ";
  for (std::size_t i = 0; i < shortlist.size(); ++i) out << (i ? ", " : "") << shortlist[i];
  out << '\n';
  out << "context = " << to_string(context) << '\n';
  out << "fusion = " << to_string(fusion) << '\n';
  out << "gating_loss = " << to_string(gating_loss) << '\n';
  out << "x0 = " << join(kalman.x0) << '\n';
  out << "p0_scale = " << number(kalman.p0_scale) << '\n';
  out << "q_variance = " << number(kalman.q_variance) << '\n';
  out << "q_model = " << to_string(kalman.q_model) << '\n';
  out << "epsilon = " << number(kalman.epsilon) << '\n';
  if (!kalman.gamma.empty()) out << "gamma = " << join(kalman.gamma) << '\n';
  out << "r_map = " << to_string(kalman.r_map) << '\n';
  if (kalman.r_map == NoiseMap::Constant) out << "r_constant = " << number(kalman.r_constant) << '\n';
}

void FusionConfig::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  write(out);
}

std::filesystem::path config_directory() {
  if (const char* env = std::getenv("SELFCARE_CONFIG_DIR"); env && *env) return env;
  const std::filesystem::path build = SELFCARE_CONFIG_DIR_BUILD;
  if (std::filesystem::exists(build / "wrist_3.cfg")) return build;
  return SELFCARE_CONFIG_DIR_INSTALL;
}

FusionConfig default_config(Device device, Task task) {
  const auto name = std::string(device == Device::Wrist ? "wrist" : "chest") + "_" + std::to_string(class_count(task)) + ".cfg";
  auto cfg = FusionConfig::load(config_directory() / name);
  if (cfg.device != device || cfg.task != task) throw ConfigError(name + " does not describe its device/task");
  return cfg;
}

}  // namespace selfcare::fusion
