// selfcare: command-line front end over the core library.
//
// Exit codes: 0 ok, 2 format, 3 integrity, 4 config, 5 runtime.

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "selfcare/dataset.hpp"
#include "selfcare/dsp.hpp"
#include "selfcare/errors.hpp"
#include "selfcare/eval.hpp"
#include "selfcare/features.hpp"
#include "selfcare/parallel.hpp"
#include "selfcare/pipeline.hpp"
#include "selfcare/report.hpp"
#include "selfcare/rng.hpp"
#include "selfcare/synthetic.hpp"

namespace fs = std::filesystem;
using namespace selfcare;

namespace {

enum Exit : int { kOk = 0, kFormat = 2, kIntegrity = 3, kConfig = 4, kRuntime = 5 };

struct Common {
  std::string dataset;
  std::string device = "wrist";
  int task = 3;
  std::uint64_t seed = 0;
  int jobs = default_jobs();
  std::string out;
  std::vector<std::string> subjects;
};

Device device_of(const std::string& name) {
  const auto d = parse_device(name);
  if (!d) throw ConfigError("--device must be wrist or chest");
  return *d;
}

Task task_of(int n) {
  const auto t = parse_task(n);
  if (!t) throw ConfigError("--task must be 2 or 3");
  return *t;
}

fusion::FeatureTable load_table(const Common& c, Device device) {
  const auto store = dataset::load_store(c.dataset);
  eval::ExtractionOptions opt;
  opt.jobs = c.jobs;
  opt.subjects = c.subjects;
  std::cerr << "extracting features for " << (c.subjects.empty() ? store.size() : c.subjects.size())
            << " subjects (" << to_string(device) << ")\n";
  return eval::build_feature_table(store, device, opt);
}

eval::RunInfo run_info(const std::string& command, const Common& c, const fusion::FeatureTable& table,
                       std::string config_text) {
  eval::RunInfo info;
  info.command = command;
  info.dataset = fs::path(c.dataset).filename().string();
  info.seed = c.seed;
  info.subjects = table.subject_ids();
  info.config_text = std::move(config_text);
  return info;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- commands ----

int cmd_validate(const Common& c) {
  const auto store = dataset::load_store(c.dataset);
  std::cout << store.size() << " subjects\n";
  for (const auto& s : store.subjects()) {
    std::cout << s.id;
    for (const auto& d : s.devices) {
      std::cout << "  " << to_string(d.device) << ":";
      for (const auto& ch : d.channels) std::cout << ' ' << to_string(ch.modality) << '@' << ch.rate_hz;
      std::cout << " labels@" << d.label_rate_hz;
    }
    std::cout << '\n';
  }
  return kOk;
}

int cmd_extract(const Common& c) {
  const auto device = device_of(c.device);
  const auto table = load_table(c, device);
  std::ostringstream csv;
  csv << "subject,window_index,label";
  for (const auto& [s, m] : table.blocks) {
    for (const auto& d : features::descriptors(s)) csv << ',' << d.name;
  }
  csv << '\n' << std::setprecision(10);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    csv << table.subject[r] << ',' << table.window_index[r] << ',' << table.label_code[r];
    for (const auto& [s, m] : table.blocks) {
      for (double v : m.row(r)) csv << ',' << v;
    }
    csv << '\n';
  }
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    eval::write_text(c.out, csv.str());
    std::cout << table.rows() << " segments written to " << c.out << '\n';
  }
  return kOk;
}

int run_benchmark(const Common& c, const std::vector<std::string>& family_names, const std::vector<std::string>& ids,
                  std::size_t shortlist_size) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto device = device_of(c.device);
  const auto task = task_of(c.task);
  std::vector<learners::Family> families;
  for (const auto& n : family_names) {
    const auto f = learners::parse_family(n);
    if (!f) throw ConfigError("unknown family " + n);
    families.push_back(*f);
  }
  if (families.empty()) families.assign(std::begin(learners::kAllFamilies), std::end(learners::kAllFamilies));
  std::vector<fusion::BranchSpec> branches;
  if (ids.empty()) {
    branches = fusion::catalog(device);
  } else {
    for (const auto& id : ids) {
      const auto& b = fusion::find_branch(id);
      if (b.device != device) throw ConfigError("branch " + id + " is not a " + c.device + " branch");
      branches.push_back(b);
    }
  }
  const auto table = load_table(c, device);
  eval::RunOptions opt;
  opt.seed = c.seed;
  opt.jobs = c.jobs;
  const auto result = eval::run_benchmark(table, branches, families, task, opt);

  std::ostringstream settings;
  settings << "device = " << c.device << "\ntask = " << c.task << "\nfamilies =";
  for (auto f : families) settings << ' ' << learners::to_string(f);
  settings << "\nbranches =";
  for (const auto& b : branches) settings << ' ' << b.id;
  settings << '\n';

  const auto table_text = eval::format_table(result);
  std::cout << table_text;
  for (auto f : families) {
    std::cout << "lowest training loss (" << learners::to_string(f) << "):";
    for (const auto& b : result.shortlist(f, shortlist_size)) std::cout << ' ' << b.id;
    std::cout << '\n';
  }
  if (!c.out.empty()) {
    const fs::path out = c.out;
    eval::write_text(out / "report.json", eval::report_json(result, run_info("benchmark", c, table, settings.str())));
    eval::write_text(out / "table.txt", table_text);
    eval::write_text(out / "timing.json", eval::timing_json(seconds_since(t0), c.jobs));
  }
  return kOk;
}

struct EvalFlags {
  std::string fusion;
  std::optional<double> delta;
  std::string config;
  std::string context;
  bool benchmark = false;
  bool no_compare = false;
  bool predictions = false;
  std::string save_bundle;
};

int cmd_eval(const Common& c, const EvalFlags& f) {
  const auto device = device_of(c.device);
  const auto task = task_of(c.task);
  if (f.benchmark) return run_benchmark(c, {}, {}, device == Device::Wrist ? 3 : 5);
  const auto t0 = std::chrono::steady_clock::now();

  auto cfg = f.config.empty() ? fusion::default_config(device, task) : fusion::FusionConfig::load(f.config);
  if (cfg.device != device || cfg.task != task) throw ConfigError("fusion config is for another device or task");
  if (!f.fusion.empty()) {
    const auto b = fusion::parse_late_fusion(f.fusion);
    if (!b) throw ConfigError("--fusion must be hard, soft or kalman");
    cfg.fusion = *b;
  }
  if (f.delta) cfg.delta = *f.delta;
  if (!f.context.empty()) {
    const auto s = parse_sensor(f.context);
    if (!s) throw ConfigError("unknown context sensor " + f.context);
    cfg.context = *s;
  }
  cfg.validate();

  const auto table = load_table(c, device);
  eval::SelfCareOptions opt;
  opt.seed = c.seed;
  opt.jobs = c.jobs;
  opt.comparisons = !f.no_compare;
  const auto result = eval::run_selfcare(table, cfg, opt);

  std::ostringstream cfg_text;
  cfg.write(cfg_text);
  const auto table_text = eval::format_table(result);
  std::cout << table_text;
  if (!c.out.empty()) {
    const fs::path out = c.out;
    eval::write_text(out / "report.json", eval::report_json(result, run_info("eval", c, table, cfg_text.str())));
    eval::write_text(out / "table.txt", table_text);
    if (f.predictions) eval::write_text(out / "predictions.csv", eval::predictions_csv(result));
    eval::write_text(out / "timing.json", eval::timing_json(seconds_since(t0), c.jobs));
  }
  if (!f.save_bundle.empty()) {
    fusion::TrainOptions to;
    to.seed = c.seed;
    to.jobs = c.jobs;
    fusion::train_bundle(table, cfg, to).save(f.save_bundle);
    std::cout << "bundle trained on all subjects written to " << f.save_bundle << '\n';
  }
  return kOk;
}

int cmd_predict(const std::string& bundle_dir, const std::string& segment_file) {
  fusion::SelfCareClassifier clf(fusion::Bundle::load(bundle_dir));
  const auto& cfg = clf.config();
  const auto raw = dataset::read_segment_csv(segment_file, cfg.device);
  const auto rec = dsp::preprocess(raw);
  WindowedSegment seg;
  seg.subject_id = rec.subject_id;
  seg.device = rec.device;
  seg.window_s = rec.duration_s();
  seg.label = kBaselineCode;
  for (const auto& [m, ch] : rec.channels) seg.channels[m] = ChannelView{m, ch.rate_hz, ch.samples};

  fusion::SegmentFeatures src(seg);
  const auto p = clf.classify(src);
  std::cout << "class: " << class_name(p.label, cfg.task) << '\n';
  std::cout << "scores:";
  for (std::size_t c = 0; c < p.scores.size(); ++c) {
    std::cout << ' ' << class_name(static_cast<int>(c), cfg.task) << '=' << std::setprecision(4) << p.scores[c];
  }
  std::cout << "\nselected:";
  for (const auto& id : p.selected_ids) std::cout << ' ' << id;
  std::cout << "\ngate:";
  for (std::size_t i = 0; i < p.gate.probabilities.size(); ++i) {
    std::cout << ' ' << clf.bundle().branches[i].id << '=' << std::setprecision(4) << p.gate.probabilities[i];
  }
  std::cout << " (delta " << p.gate.delta << ", context " << to_string(p.gate.context) << ")\n";
  return kOk;
}

struct SynthFlags {
  std::size_t subjects = 6;
  std::string segment;
  std::string label = "stress";
};

int cmd_synth(const Common& c, const SynthFlags& f) {
  dataset::DemoOptions opt;
  opt.device = device_of(c.device);
  opt.subjects = f.subjects;
  opt.seed = c.seed;
  if (!f.segment.empty()) {
    // One fresh subject outside the store's index range; cut 60 s from the
    // middle of the requested protocol phase.
    std::int32_t code = 0;
    for (std::int32_t k : {kBaselineCode, kStressCode, kAmusementCode}) {
      if (class_name(*class_index(k, Task::ThreeClass), Task::ThreeClass) == f.label) code = k;
    }
    if (code == 0) throw ConfigError("--label must be baseline, stress or amusement");
    const auto scenario = dataset::make_demo_scenario(opt, f.subjects + 100);
    const auto rec = dataset::generate_synthetic(scenario, derive_seed(c.seed, {f.subjects + 100}));
    for (const auto& span : scenario.labels) {
      if (span.code != code) continue;
      const double mid = 0.5 * (span.start_s + span.end_s);
      dataset::write_segment_csv(f.segment, dataset::slice_record(rec, mid - 30.0, 60.0));
      std::cout << "segment (" << f.label << ") written to " << f.segment << '\n';
      return kOk;
    }
    throw ConfigError("scenario has no " + f.label + " phase");
  }
  if (c.out.empty()) throw ConfigError("synth needs --out or --segment");
  const auto records = dataset::generate_demo_store(opt);
  dataset::write_store(c.out, records);
  std::cout << records.size() << " synthetic subjects written to " << c.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SELF-CARE selective sensor fusion toolkit"};
  app.require_subcommand(1);
  Common c;
  EvalFlags ef;
  SynthFlags sf;
  std::vector<std::string> families, branches;
  std::size_t shortlist_size = 0;
  std::string bundle_dir, segment_file;

  auto add_common = [&](CLI::App* sub, bool needs_dataset) {
    auto* d = sub->add_option("--dataset", c.dataset, "Converted store directory");
    if (needs_dataset) d->required()->check(CLI::ExistingDirectory);
    sub->add_option("--device", c.device, "wrist or chest")->check(CLI::IsMember({"wrist", "chest"}));
    sub->add_option("--seed", c.seed, "Base seed");
    sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "Output directory (or file for extract)");
  };
  auto add_task = [&](CLI::App* sub) { sub->add_option("--task", c.task, "2 or 3 classes")->check(CLI::IsMember({2, 3})); };
  auto add_subjects = [&](CLI::App* sub) {
    sub->add_option("--subjects", c.subjects, "Subset of subject ids")->delimiter(',');
  };

  auto* validate = app.add_subcommand("validate", "Check a converted store and list its channels");
  validate->add_option("--dataset", c.dataset, "Converted store directory")->required();

  auto* extract = app.add_subcommand("extract", "Write the per-segment feature table as CSV");
  add_common(extract, true);
  add_subjects(extract);

  auto* bench = app.add_subcommand("benchmark", "LOSO early-fusion table over branches and learner families");
  add_common(bench, true);
  add_task(bench);
  add_subjects(bench);
  bench->add_option("--families", families, "Learner families (default: all)")->delimiter(',');
  bench->add_option("--branches", branches, "Branch ids (default: the whole catalog)")->delimiter(',');
  bench->add_option("--shortlist-size", shortlist_size, "Branches to report as lowest-loss shortlist");

  auto* ev = app.add_subcommand("eval", "LOSO evaluation of the gated fusion pipeline");
  add_common(ev, true);
  add_task(ev);
  add_subjects(ev);
  ev->add_option("--fusion", ef.fusion, "hard, soft or kalman (default from config)");
  ev->add_option("--delta", ef.delta, "Gate selection width override")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--config", ef.config, "Fusion config file")->check(CLI::ExistingFile);
  ev->add_option("--context", ef.context, "Gate context sensor override (e.g. ACC, EMG)");
  ev->add_flag("--benchmark", ef.benchmark, "Run the early-fusion benchmark instead");
  ev->add_flag("--no-compare", ef.no_compare, "Only evaluate the configured method");
  ev->add_flag("--predictions", ef.predictions, "Also write predictions.csv");
  ev->add_option("--save-bundle", ef.save_bundle, "Train on all subjects and save the bundle here");

  auto* predict = app.add_subcommand("predict", "Classify one segment with a trained bundle");
  predict->add_option("--bundle", bundle_dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--segment", segment_file, "Segment CSV")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic store or a single segment");
  add_common(synth, false);
  synth->add_option("--subjects", sf.subjects, "Number of subjects")->check(CLI::PositiveNumber);
  synth->add_option("--segment", sf.segment, "Write one 60 s segment CSV instead of a store");
  synth->add_option("--label", sf.label, "Phase of the segment")->check(CLI::IsMember({"baseline", "stress", "amusement"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*validate) return cmd_validate(c);
    if (*extract) return cmd_extract(c);
    if (*bench) {
      if (shortlist_size == 0) shortlist_size = device_of(c.device) == Device::Wrist ? 3 : 5;
      return run_benchmark(c, families, branches, shortlist_size);
    }
    if (*ev) return cmd_eval(c, ef);
    if (*predict) return cmd_predict(bundle_dir, segment_file);
    if (*synth) return cmd_synth(c, sf);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const MissingModalityError& e) {
    std::cerr << "missing modality: " << e.what() << '\n';
    return kFormat;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kIntegrity;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
