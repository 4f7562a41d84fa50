#include "selfcare/features.hpp"

#include <map>
#include <string>

#include "selfcare/errors.hpp"

namespace selfcare::features {
namespace {

using Sh = ShiftBehaviour;
using Sc = ScaleBehaviour;

std::vector<FeatureDescriptor> prefixed(std::string_view prefix, std::vector<FeatureDescriptor> list) {
  for (auto& d : list) d.name = std::string(prefix) + "_" + d.name;
  return list;
}

std::vector<FeatureDescriptor> acc_list() {
  return prefixed("ACC", {
      {"x_mean", Sh::Shifts, Sc::Covariant},
      {"x_std", Sh::Invariant, Sc::Covariant},
      {"y_mean", Sh::Shifts, Sc::Covariant},
      {"y_std", Sh::Invariant, Sc::Covariant},
      {"z_mean", Sh::Shifts, Sc::Covariant},
      {"z_std", Sh::Invariant, Sc::Covariant},
      {"mag_mean", Sh::Other, Sc::Covariant},
      {"mag_std", Sh::Other, Sc::Covariant},
      {"sum_mean", Sh::Other, Sc::Covariant},
      {"sum_std", Sh::Invariant, Sc::Covariant},
      {"x_abs_integral", Sh::Other, Sc::Covariant},
      {"y_abs_integral", Sh::Other, Sc::Covariant},
      {"z_abs_integral", Sh::Other, Sc::Covariant},
      {"total_abs_integral", Sh::Other, Sc::Covariant},
      {"mag_abs_integral", Sh::Other, Sc::Covariant},
      {"x_peak_freq", Sh::Invariant, Sc::Invariant},
      {"y_peak_freq", Sh::Invariant, Sc::Invariant},
      {"z_peak_freq", Sh::Invariant, Sc::Invariant},
      {"mag_peak_freq", Sh::Other, Sc::Invariant},
  });
}

// Beat timing does not depend on the signal's offset or gain.
std::vector<FeatureDescriptor> cardiac_list(std::string_view prefix) {
  std::vector<FeatureDescriptor> list;
  for (const char* n : {"mean_hr", "std_hr", "mean_ibi", "std_ibi", "nn50", "pnn50", "rmssd", "ulf",
                        "lf", "hf", "uhf", "lf_hf", "band_sum", "rel_ulf", "rel_lf", "rel_hf",
                        "lf_norm", "hf_norm", "valid"}) {
    list.push_back({n, Sh::Invariant, Sc::Invariant});
  }
  return prefixed(prefix, std::move(list));
}

std::vector<FeatureDescriptor> emg_list() {
  std::vector<FeatureDescriptor> list = {
      {"mean", Sh::Shifts, Sc::Covariant},
      {"std", Sh::Invariant, Sc::Covariant},
      {"median", Sh::Shifts, Sc::Covariant},
      {"range", Sh::Invariant, Sc::Covariant},
      {"abs_integral", Sh::Other, Sc::Covariant},
      {"p10", Sh::Shifts, Sc::Covariant},
      {"p90", Sh::Shifts, Sc::Covariant},
      {"mean_freq", Sh::Invariant, Sc::Invariant},
      {"median_freq", Sh::Invariant, Sc::Invariant},
      {"peak_freq", Sh::Invariant, Sc::Invariant},
  };
  for (int b = 0; b < FeatureConfig{}.emg_bands; ++b) {
    list.push_back({"band" + std::to_string(b + 1) + "_energy", Sh::Invariant, Sc::Quadratic});
  }
  list.insert(list.end(), {
                              {"peak_count", Sh::Invariant, Sc::Invariant},
                              {"peak_amp_mean", Sh::Invariant, Sc::Covariant},
                              {"peak_amp_std", Sh::Invariant, Sc::Covariant},
                              {"peak_amp_sum", Sh::Invariant, Sc::Covariant},
                              {"peak_amp_sum_per_s", Sh::Invariant, Sc::Covariant},
                              {"peak_valid", Sh::Invariant, Sc::Invariant},
                          });
  return prefixed("EMG", std::move(list));
}

std::vector<FeatureDescriptor> eda_list() {
  return prefixed("EDA", {
      {"mean", Sh::Shifts, Sc::Covariant},
      {"std", Sh::Invariant, Sc::Covariant},
      {"min", Sh::Shifts, Sc::Covariant},
      {"max", Sh::Shifts, Sc::Covariant},
      {"slope", Sh::Invariant, Sc::Covariant},
      {"range", Sh::Invariant, Sc::Covariant},
      {"scl_mean", Sh::Shifts, Sc::Covariant},
      {"scl_std", Sh::Invariant, Sc::Covariant},
      {"scr_std", Sh::Invariant, Sc::Covariant},
      {"scl_time_corr", Sh::Invariant, Sc::Invariant},
      {"scl_time_corr_valid", Sh::Invariant, Sc::Invariant},
      // the response threshold is absolute, so gain changes the segmentation
      {"scr_count", Sh::Invariant, Sc::Other},
      {"scr_magnitude_sum", Sh::Invariant, Sc::Other},
      {"scr_duration_sum", Sh::Invariant, Sc::Other},
      {"scr_area", Sh::Invariant, Sc::Other},
  });
}

std::vector<FeatureDescriptor> resp_list() {
  return prefixed("RESP", {
      {"inhale_mean", Sh::Invariant, Sc::Invariant},
      {"inhale_std", Sh::Invariant, Sc::Invariant},
      {"exhale_mean", Sh::Invariant, Sc::Invariant},
      {"exhale_std", Sh::Invariant, Sc::Invariant},
      {"ie_ratio", Sh::Invariant, Sc::Invariant},
      {"inspiration_volume", Sh::Invariant, Sc::Covariant},
      {"range", Sh::Invariant, Sc::Covariant},
      {"rate", Sh::Invariant, Sc::Invariant},
      {"breath_duration_sum", Sh::Invariant, Sc::Invariant},
      {"valid", Sh::Invariant, Sc::Invariant},
  });
}

std::vector<FeatureDescriptor> temp_list() {
  return prefixed("TEMP", {
      {"mean", Sh::Shifts, Sc::Covariant},
      {"std", Sh::Invariant, Sc::Covariant},
      {"min", Sh::Shifts, Sc::Covariant},
      {"max", Sh::Shifts, Sc::Covariant},
      {"slope", Sh::Invariant, Sc::Covariant},
      {"range", Sh::Invariant, Sc::Covariant},
  });
}

}  // namespace

const std::vector<FeatureDescriptor>& descriptors(Sensor s) {
  static const std::map<Sensor, std::vector<FeatureDescriptor>> table = {
      {Sensor::ACC, acc_list()},      {Sensor::BVP, cardiac_list("BVP")},
      {Sensor::ECG, cardiac_list("ECG")}, {Sensor::RESP, resp_list()},
      {Sensor::EMG, emg_list()},      {Sensor::EDA, eda_list()},
      {Sensor::TEMP, temp_list()},
  };
  return table.at(s);
}

std::size_t feature_count(Sensor s) { return descriptors(s).size(); }

std::vector<std::string> FeatureVector::names() const {
  std::vector<std::string> out;
  for (auto s : sensors) {
    for (const auto& d : descriptors(s)) out.push_back(d.name);
  }
  return out;
}

std::vector<double> extract(const WindowedSegment& segment, Sensor s, const FeatureConfig& cfg) {
  switch (s) {
    case Sensor::ACC: {
      const auto& x = segment.channel(Modality::ACC_X);
      const auto& y = segment.channel(Modality::ACC_Y);
      const auto& z = segment.channel(Modality::ACC_Z);
      return acc_features(x.samples, y.samples, z.samples, x.rate_hz);
    }
    case Sensor::BVP:
    case Sensor::ECG: {
      const auto& ch = segment.channel(s == Sensor::BVP ? Modality::BVP : Modality::ECG);
      try {
        return cardiac_features(ch.samples, ch.rate_hz, cfg);
      } catch (const InsufficientBeatsError&) {
        return std::vector<double>(feature_count(s), 0.0);
      }
    }
    case Sensor::EMG: {
      const auto& emg = segment.channel(Modality::EMG);
      const auto& peak = segment.channel(Modality::EMG_PEAK);
      return emg_features(emg.samples, emg.rate_hz, peak.samples, peak.rate_hz, cfg);
    }
    case Sensor::EDA: {
      const auto& ch = segment.channel(Modality::EDA);
      return eda_features(ch.samples, ch.rate_hz, cfg);
    }
    case Sensor::RESP: {
      const auto& ch = segment.channel(Modality::RESP);
      return resp_features(ch.samples, ch.rate_hz);
    }
    case Sensor::TEMP: {
      const auto& ch = segment.channel(Modality::TEMP);
      return temp_features(ch.samples, ch.rate_hz);
    }
  }
  throw DataError("unknown sensor");
}

}  // namespace selfcare::features
