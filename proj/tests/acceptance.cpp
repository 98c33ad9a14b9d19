// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "jsdscore/cohort.hpp"
#include "jsdscore/detector.hpp"
#include "jsdscore/divergence.hpp"
#include "jsdscore/io.hpp"
#include "jsdscore/synth.hpp"
#include "test_support.hpp"

using namespace jsdscore;
using jsdscore::testing::gaussian_density;
using jsdscore::testing::random_density;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Mann-Whitney AUC: probability a positive scores above a negative, ties count half.
double auc(const std::vector<double>& negatives, const std::vector<double>& positives) {
  double wins = 0.0;
  for (double p : positives) {
    for (double n : negatives) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / static_cast<double>(negatives.size() * positives.size());
}

// ------------------------------------------------------------------ oracles

Outcome discrete_oracle() {
  // Unit-spaced grid: an interior node value v carries trapezoid mass v.
  const Grid grid(0.0, 15.0, 16);
  std::vector<double> p(16, 0.0), q(16, 0.0);
  p[4] = 0.5;
  p[10] = 0.5;
  q[4] = 1.0;
  const double v = jsd({grid, p}, {grid, q});
  return {std::abs(v - 0.3112781) <= 1e-6, "jsd = " + fmt("%.9f", v)};
}

Outcome jsd_properties() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  const Grid grid(-5.0, 5.0, 512);
  double worst_sym = 0.0, worst_self = 0.0, lo = 1.0, hi = 0.0, min_kl = HUGE_VAL;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_density(grid, rng);
    auto q = random_density(grid, rng);
    if (i % 2 == 1) {
      // Blend toward p so the suite also covers nearly equal pairs.
      const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      for (std::size_t k = 0; k < q.values.size(); ++k) q.values[k] = t * q.values[k] + (1.0 - t) * p.values[k];
    }
    const double pq = jsd(p, q), qp = jsd(q, p);
    worst_sym = std::max(worst_sym, std::abs(pq - qp));
    worst_self = std::max(worst_self, std::abs(jsd(p, p)));
    lo = std::min(lo, pq);
    hi = std::max(hi, pq);
    min_kl = std::min({min_kl, kl_divergence(p, q), kl_divergence(q, p)});
  }
  const double t = seconds_since(t0);
  const bool ok = worst_sym <= 1e-10 && worst_self <= 1e-10 && lo >= -1e-9 && hi <= 1.0 + 1e-9 && min_kl >= -1e-9 && t < 5.0;
  return {ok, "max |jsd(p,q)-jsd(q,p)| = " + fmt("%.2e", worst_sym) + ", max jsd(p,p) = " + fmt("%.2e", worst_self) +
                  ", range [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], min kl = " + fmt("%.2e", min_kl) +
                  ", " + fmt("%.2f", t) + " s"};
}

Outcome kde_normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(2 + static_cast<std::size_t>(trial) * 3);
    const double s = scale(rng), m = 50.0 * n(rng);
    for (double& v : x) v = m + s * n(rng);
    const double h = silverman_bandwidth(x);
    const auto kde = kde_on_grid(x, h, build_grid(x, h));
    worst = std::max(worst, std::abs(trapezoid_integral(kde.density) - 1.0));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 5.0, "max |mass - 1| = " + fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome silverman_oracle() {
  const double h = silverman_bandwidth(std::vector<double>{1, 2, 3, 4, 5});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(3.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5 + static_cast<std::size_t>(trial));
    for (double& v : x) v = n(rng);
    const double base = silverman_bandwidth(x);
    for (double a : {0.001, 0.5, 3.0, 1000.0}) {
      std::vector<double> y(x);
      for (double& v : y) v *= a;
      worst = std::max(worst, std::abs(silverman_bandwidth(y) - a * base) / (a * base));
    }
    for (double b : {-1000.0, 0.25, 77.0}) {
      std::vector<double> y(x);
      for (double& v : y) v += b;
      worst = std::max(worst, std::abs(silverman_bandwidth(y) - base) / base);
    }
  }
  return {std::abs(h - 0.9736) <= 1e-3 && worst <= 1e-10,
          "h([1..5]) = " + fmt("%.6f", h) + ", max relative property error = " + fmt("%.2e", worst)};
}

Outcome grid_refinement() {
  const auto at = [](std::size_t n) {
    const Grid grid(-10.0, 12.0, n);
    return jsd(gaussian_density(grid, 0.0, 1.0), gaussian_density(grid, 1.5, 2.0));
  };
  const double a = at(512), b = at(4096);
  return {std::abs(a - b) <= 1e-3, "jsd@512 = " + fmt("%.7f", a) + ", jsd@4096 = " + fmt("%.7f", b)};
}

// -------------------------------------------------------- synthetic cohort

constexpr std::size_t kControls = 200;
constexpr std::size_t kHeldOut = 10;
constexpr std::size_t kTreatment = 10;

std::string control_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04zu", i + 1);
  return buf;
}

struct Experiment {
  ObservationTable table;
  std::shared_ptr<const ReferenceModel> model;
  std::vector<std::string> held_out;
  std::vector<std::string> treatment;
  std::map<std::string, HourlyMatrix> prepared;
  std::map<std::string, std::vector<ScoreRecord>> scores;
  double seconds = 0.0;
};

Experiment run_experiment() {
  const auto t0 = std::chrono::steady_clock::now();
  Experiment e;
  SynthConfig config = SynthConfig::clinical_default();
  config.n_control = kControls + kHeldOut;
  config.n_treatment = kTreatment;
  config.seed = 2718;
  e.table = generate_cohort(config);

  PipelineOptions options;
  options.created = "1970-01-01T00:00:00Z";
  for (std::size_t i = kControls; i < kControls + kHeldOut; ++i) {
    e.held_out.push_back(control_name(i));
    options.build.exclude_patients.insert(control_name(i));
  }
  for (const auto& id : e.table.patients()) {
    if (e.table.cohort_of(id) == Cohort::Treatment) e.treatment.push_back(id);
  }
  e.model = std::make_shared<const ReferenceModel>(build_reference_pipeline(e.table, options).model);

  std::vector<std::string> scored(e.held_out);
  scored.insert(scored.end(), e.treatment.begin(), e.treatment.end());
  for (const auto& id : scored) {
    auto m = prepare_for_scoring(bucket_hourly(e.table, id), e.model->feature_ids());
    e.scores[id] = score_patient(e.model, m);
    e.prepared.emplace(id, std::move(m));
  }
  e.seconds = seconds_since(t0);
  return e;
}

double mean_post_onset(const std::vector<ScoreRecord>& records) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : records) {
    if (r.hour_index >= 25 && r.comprehensive) {
      s += *r.comprehensive;
      ++n;
    }
  }
  return s / n;
}

Outcome window_count(const Experiment& e) {
  const auto& records = e.scores.at(e.held_out.front());
  bool hours_ok = records.size() == 47;
  for (std::size_t i = 0; hours_ok && i < records.size(); ++i) hours_ok = records[i].hour_index == static_cast<long>(i + 1);
  return {hours_ok, std::to_string(records.size()) + " records from a dense 48-hour patient"};
}

Outcome stream_batch(const Experiment& e) {
  std::size_t patients = 0, mismatches = 0;
  for (const auto& [id, m] : e.prepared) {
    Scorer scorer(e.model, id);
    std::vector<ScoreRecord> streamed;
    for (std::size_t h = 0; h < m.horizon(); ++h) {
      HourValues values;
      for (std::size_t j = 0; j < m.n_features(); ++j) values[m.features()[j]] = m.at(h, j);
      if (auto r = scorer.push_hour(static_cast<long>(h), values); r && r->comprehensive) streamed.push_back(*r);
    }
    ++patients;
    if (streamed != e.scores.at(id)) ++mismatches;
  }
  return {patients == 20 && mismatches == 0,
          std::to_string(patients) + " patients, " + std::to_string(mismatches) + " mismatching"};
}

Outcome separation(const Experiment& e) {
  std::vector<double> controls, treated;
  for (const auto& id : e.held_out) controls.push_back(mean_post_onset(e.scores.at(id)));
  for (const auto& id : e.treatment) treated.push_back(mean_post_onset(e.scores.at(id)));
  const double a = auc(controls, treated);

  // Label-shuffled baseline, averaged over seeded permutations.
  std::vector<double> pooled(controls);
  pooled.insert(pooled.end(), treated.begin(), treated.end());
  std::mt19937_64 rng(99);
  double shuffled = 0.0;
  constexpr int kPermutations = 1000;
  for (int k = 0; k < kPermutations; ++k) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    shuffled += auc({pooled.begin(), pooled.begin() + 10}, {pooled.begin() + 10, pooled.end()});
  }
  shuffled /= kPermutations;
  const bool ok = a >= 0.85 && shuffled >= 0.3 && shuffled <= 0.7 && e.seconds < 60.0;
  return {ok, "auc = " + fmt("%.3f", a) + ", shuffled-label auc = " + fmt("%.3f", shuffled) + ", " +
                  fmt("%.1f", e.seconds) + " s"};
}

Outcome attribution(const Experiment& e) {
  const auto features = e.model->feature_ids();
  std::map<std::string, double> delta;
  for (const auto& id : e.treatment) {
    std::map<std::string, std::pair<double, int>> pre, post;
    for (const auto& r : e.scores.at(id)) {
      if (r.hour_index == 24) continue;  // window straddles the onset
      for (const auto& [f, v] : r.per_feature.entries) {
        auto& slot = r.hour_index >= 25 ? post[f] : pre[f];
        slot.first += v;
        ++slot.second;
      }
    }
    for (const auto& f : features) {
      if (pre[f].second == 0 || post[f].second == 0) continue;
      delta[f] += (post[f].first / post[f].second - pre[f].first / pre[f].second) / static_cast<double>(e.treatment.size());
    }
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [f, d] : delta) ranked.emplace_back(d, f);
  std::sort(ranked.rbegin(), ranked.rend());
  std::set<std::string> top;
  std::string listing;
  for (std::size_t i = 0; i < std::min<std::size_t>(8, ranked.size()); ++i) {
    top.insert(ranked[i].second);
    listing += (i ? " " : "") + ranked[i].second;
  }
  bool ok = true;
  for (const auto& f : SynthConfig::clinical_default().drift.shifted_features) ok = ok && top.contains(f);
  return {ok, "top 8 by delta: " + listing};
}

Outcome constant_window(const Experiment& e) {
  Scorer scorer(e.model, "flat");
  HourValues values;
  for (const auto& f : e.model->feature_ids()) values[f] = e.model->find(f)->sample_mean;
  (void)scorer.push_hour(0, values);
  const auto r = scorer.push_hour(1, values);
  bool ok = r && r->comprehensive && std::isfinite(*r->comprehensive) && *r->comprehensive >= 0.0 &&
            *r->comprehensive <= 1.0 && r->features_used() == e.model->features.size();
  for (const auto& [f, v] : r->per_feature.entries) ok = ok && std::isfinite(v) && v >= 0.0 && v <= 1.0;
  return {ok, "comprehensive = " + (r && r->comprehensive ? fmt("%.6f", *r->comprehensive) : std::string("none"))};
}

Outcome persistence(const Experiment& e) {
  const auto back = load_reference(save_reference(*e.model));
  double worst = 0.0;
  bool shape = back.features.size() == e.model->features.size();
  for (std::size_t k = 0; shape && k < back.features.size(); ++k) {
    const auto& a = e.model->features[k].density;
    const auto& b = back.features[k].density;
    shape = a.grid == b.grid && a.values.size() == b.values.size();
    for (std::size_t i = 0; shape && i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  }
  return {shape && worst <= 1e-12, "max pointwise difference = " + fmt("%.2e", worst)};
}

}  // namespace

int main() {
  const Experiment e = run_experiment();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"discrete jsd oracle", discrete_oracle},
      {"jsd property suite", jsd_properties},
      {"kde normalization", kde_normalization},
      {"silverman bandwidth", silverman_oracle},
      {"window count", [&] { return window_count(e); }},
      {"streaming/batch equivalence", [&] { return stream_batch(e); }},
      {"grid refinement", grid_refinement},
      {"cohort separation", [&] { return separation(e); }},
      {"feature attribution", [&] { return attribution(e); }},
      {"constant window", [&] { return constant_window(e); }},
      {"persistence round trip", [&] { return persistence(e); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
