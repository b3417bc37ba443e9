#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "xsense/ingest.hpp"

namespace xsense {
using nlohmann::json;

std::string SyntheticSpec::sensor_id(int s) const { return fmt::format("S{}", s + 1); }

std::string SyntheticSpec::subject_id(int i) const { return fmt::format("subject{:02d}", i + 1); }

void SyntheticSpec::validate() const {
  if (n_subjects < 1 || n_sensors < 1 || n_actions < 1) {
    throw ValidationError("synthetic: subject, sensor and action counts must be positive");
  }
  if (activities.empty()) throw ValidationError("synthetic: no activities declared");
  for (const auto& a : activities) {
    if (a.actions.empty()) {
      throw ValidationError(fmt::format("synthetic: activity '{}' has no actions", a.label));
    }
    for (int act : a.actions) {
      if (act < 0 || act >= n_actions) {
        throw ValidationError(
            fmt::format("synthetic: activity '{}' uses undeclared action {}", a.label, act));
      }
    }
  }
  if (observability.size() != static_cast<std::size_t>(n_sensors)) {
    throw ValidationError("synthetic: observability needs one row per sensor");
  }
  for (std::size_t s = 0; s < observability.size(); ++s) {
    const auto& row = observability[s];
    if (row.size() != static_cast<std::size_t>(n_actions)) {
      throw ValidationError(fmt::format("synthetic: observability row {} needs {} entries", s,
                                        n_actions));
    }
    if (std::any_of(row.begin(), row.end(), [](double v) { return !(v >= 0.0 && v <= 1.0); })) {
      throw ValidationError(fmt::format("synthetic: observability row {} leaves [0, 1]", s));
    }
    if (std::none_of(row.begin(), row.end(), [](double v) { return v > 0.0; })) {
      throw ValidationError(fmt::format("synthetic: sensor {} observes no action", s));
    }
  }
  if (!(noise_std >= 0.0)) throw ValidationError("synthetic: noise_std must be nonnegative");
  if (samples_per_action < 1 || channels_per_sensor < 1 || repetitions < 1) {
    throw ValidationError("synthetic: sample, channel and repetition counts must be positive");
  }
  if (!(sampling_rate_hz > 0.0)) throw ValidationError("synthetic: sampling rate must be positive");
  if (labeled_repetitions < -1 || labeled_repetitions > repetitions) {
    throw ValidationError("synthetic: labeled_repetitions must be -1 or lie in [0, repetitions]");
  }
  if (!(subject_variability >= 0.0 && subject_variability < 1.0)) {
    throw ValidationError("synthetic: subject_variability must lie in [0, 1)");
  }
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec s;
  try {
    s.n_subjects = j.at("n_subjects").get<int>();
    s.n_sensors = j.at("n_sensors").get<int>();
    s.n_actions = j.at("n_actions").get<int>();
    for (const auto& a : j.at("activities")) {
      s.activities.push_back({a.at("label").get<std::string>(), a.at("actions").get<std::vector<int>>()});
    }
    s.observability = j.at("observability").get<std::vector<std::vector<double>>>();
    s.noise_std = j.value("noise_std", s.noise_std);
    s.samples_per_action = j.value("samples_per_action", s.samples_per_action);
    s.channels_per_sensor = j.value("channels_per_sensor", s.channels_per_sensor);
    s.sampling_rate_hz = j.value("sampling_rate_hz", s.sampling_rate_hz);
    s.repetitions = j.value("repetitions", s.repetitions);
    s.subject_variability = j.value("subject_variability", s.subject_variability);
    s.labeled_repetitions = j.value("labeled_repetitions", s.labeled_repetitions);
    s.seed.value = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("synthetic spec: {}", e.what()));
  }
  s.validate();
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  json acts = json::array();
  for (const auto& a : s.activities) acts.push_back({{"label", a.label}, {"actions", a.actions}});
  return {{"n_subjects", s.n_subjects},
          {"n_sensors", s.n_sensors},
          {"n_actions", s.n_actions},
          {"activities", acts},
          {"observability", s.observability},
          {"noise_std", s.noise_std},
          {"samples_per_action", s.samples_per_action},
          {"channels_per_sensor", s.channels_per_sensor},
          {"sampling_rate_hz", s.sampling_rate_hz},
          {"repetitions", s.repetitions},
          {"subject_variability", s.subject_variability},
          {"labeled_repetitions", s.labeled_repetitions},
          {"seed", s.seed.value}};
}

namespace {

struct Waveform {
  double offset;
  double amplitude;
  double frequency;
  double phase;

  double operator()(double t) const {
    return offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
  }
};

// Occurrence order for one subject: each activity `repetitions` times, shuffled.
std::vector<int> occurrence_order(const SyntheticSpec& spec, int subject) {
  std::vector<int> order;
  for (int r = 0; r < spec.repetitions; ++r) {
    for (std::size_t a = 0; a < spec.activities.size(); ++a) order.push_back(static_cast<int>(a));
  }
  auto rng = spec.seed.derive("order").derive(static_cast<std::uint64_t>(subject)).engine();
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

std::vector<ActionSpan> synthetic_action_spans(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<ActionSpan> spans;
  const double period = 1.0 / spec.sampling_rate_hz;
  for (int i = 0; i < spec.n_subjects; ++i) {
    std::size_t k = 0;
    int occurrence = 0;
    for (int activity : occurrence_order(spec, i)) {
      for (int action : spec.activities[static_cast<std::size_t>(activity)].actions) {
        const double start = static_cast<double>(k) * period;
        k += static_cast<std::size_t>(spec.samples_per_action);
        spans.push_back({spec.subject_id(i), start, static_cast<double>(k) * period, action,
                         activity, occurrence});
      }
      ++occurrence;
    }
  }
  return spans;
}

SensorDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int n_channels = spec.channels_per_sensor;
  const double rate = spec.sampling_rate_hz;

  // Base waveform per (sensor, channel, action); shared by all subjects.
  std::vector<Waveform> waves(static_cast<std::size_t>(spec.n_sensors * n_channels * spec.n_actions));
  {
    auto rng = spec.seed.derive("waveforms").engine();
    std::uniform_real_distribution<double> offset(-2.0, 2.0);
    std::uniform_real_distribution<double> amplitude(0.5, 2.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (auto& w : waves) {
      w.offset = offset(rng);
      w.amplitude = amplitude(rng);
      w.phase = phase(rng);
    }
    for (int s = 0; s < spec.n_sensors; ++s) {
      for (int c = 0; c < n_channels; ++c) {
        for (int a = 0; a < spec.n_actions; ++a) {
          waves[static_cast<std::size_t>((s * n_channels + c) * spec.n_actions + a)].frequency =
              0.5 + 0.35 * a;
        }
      }
    }
  }
  auto wave = [&](int s, int c, int a) -> const Waveform& {
    return waves[static_cast<std::size_t>((s * n_channels + c) * spec.n_actions + a)];
  };

  SensorDataset ds;
  ds.name = "synthetic";
  for (const auto& a : spec.activities) {
    if (std::find(ds.class_set.begin(), ds.class_set.end(), a.label) == ds.class_set.end()) {
      ds.class_set.push_back(a.label);
    }
  }
  for (int s = 0; s < spec.n_sensors; ++s) ds.sensor_tiers[spec.sensor_id(s)] = QualityTier::high;

  const auto spans = synthetic_action_spans(spec);
  for (int i = 0; i < spec.n_subjects; ++i) {
    const std::string subject = spec.subject_id(i);
    ds.subjects.push_back(subject);

    auto rng = spec.seed.derive("subject").derive(static_cast<std::uint64_t>(i)).engine();
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::vector<double> gain(static_cast<std::size_t>(spec.n_sensors));
    for (auto& g : gain) g = 1.0 + spec.subject_variability * jitter(rng);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<SensorChannel*> chans;
    for (int s = 0; s < spec.n_sensors; ++s) {
      for (int c = 0; c < n_channels; ++c) {
        auto& ch = ds.channels[ChannelKey{subject, spec.sensor_id(s), fmt::format("ch{}", c + 1)}];
        ch.sensor_id = spec.sensor_id(s);
        ch.channel_id = fmt::format("ch{}", c + 1);
        ch.sampling_rate_hz = rate;
        chans.push_back(&ch);
      }
    }

    auto& labels = ds.labels[subject];
    std::vector<int> seen(spec.activities.size(), 0);
    std::size_t k = 0;
    int last_occurrence = -1;
    bool labeled = false;
    for (const auto& span : spans) {
      if (span.subject != subject) continue;
      if (span.occurrence != last_occurrence) {
        const int nth = seen[static_cast<std::size_t>(span.activity)]++;
        labeled = spec.labeled_repetitions < 0 || nth < spec.labeled_repetitions;
        if (labeled) {
          labels.push_back(
              {span.start, span.end, spec.activities[static_cast<std::size_t>(span.activity)].label});
        }
        last_occurrence = span.occurrence;
      } else if (labeled) {
        labels.back().end = span.end;
      }
      for (int n = 0; n < spec.samples_per_action; ++n, ++k) {
        const double t = static_cast<double>(k) / rate;
        for (int s = 0; s < spec.n_sensors; ++s) {
          const double obs = spec.observability[static_cast<std::size_t>(s)]
                                               [static_cast<std::size_t>(span.action)];
          for (int c = 0; c < n_channels; ++c) {
            const double clean = obs * gain[static_cast<std::size_t>(s)] * wave(s, c, span.action)(t);
            const double v = clean + spec.noise_std * noise(rng);
            chans[static_cast<std::size_t>(s * n_channels + c)]->samples.push_back({t, v, true});
          }
        }
      }
    }
  }
  std::sort(ds.subjects.begin(), ds.subjects.end());
  return ds;
}

}  // namespace xsense
