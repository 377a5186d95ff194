// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>

#include "incad/commands.hpp"
#include "incad/evt.hpp"
#include "incad/gibbs.hpp"
#include "incad/mvn.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace incad;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Small-cluster violations seen across every final state in this run.
std::size_t g_states_checked = 0;
std::size_t g_violations = 0;

void audit_small_clusters(const ModelState& state, double frac) {
  ++g_states_checked;
  g_violations += oracle::small_cluster_violations(state, frac);
}

Observation v1(double x) { return Vector::Constant(1, x); }

Verdict crp_reduction() {
  auto cfg = std::make_shared<RunConfig>();
  const double big = 1e6;
  cfg->alpha = 1.0;
  cfg->gamma = 0.0;
  cfg->ev_prop = 0.0;
  cfg->niw.mu0 = v1(0.0);
  cfg->niw.kappa0 = big;
  cfg->niw.nu0 = big;
  cfg->niw.psi = Matrix::Constant(1, 1, big);
  cfg->sigma_new = Matrix::Identity(1, 1);
  cfg->init_clusters = 3;
  cfg->burn_in = 500;
  cfg->sweeps = cfg->burn_in + 20000;
  cfg->validate();

  const std::vector<Observation> data(3, v1(0.0));
  const auto parts = oracle::set_partitions(3);
  std::map<std::vector<int>, std::size_t> slot;
  for (std::size_t j = 0; j < parts.size(); ++j) slot[parts[j]] = j;
  std::vector<std::vector<double>> series(parts.size());

  RandomSource rng(42);
  ModelState state = initialize_state(cfg, data, rng);
  run_gibbs(state, data, rng, [&](std::size_t, const ModelState& s) {
    const std::size_t hit = slot.at(oracle::canonical(s.assignments()));
    for (std::size_t j = 0; j < parts.size(); ++j) series[j].push_back(j == hit ? 1.0 : 0.0);
  });

  Verdict v{true, fmt::format("{} recorded sweeps;", series[0].size())};
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const double exact = std::exp(oracle::crp_log_prob(parts[j], 1.0));
    const auto est = oracle::batch_means(series[j], 50);
    const double z = std::abs(est.mean - exact) / est.se;
    v.pass = v.pass && z <= 3.0;
    v.detail += fmt::format(" {}{}{}: {:.4f} vs {:.4f} ({:.1f} SE)", parts[j][0], parts[j][1], parts[j][2], est.mean,
                            exact, z);
  }
  v.pass = v.pass && series[0].size() >= 10000;
  return v;
}

Verdict non_exchangeability() {
  const std::vector<int> labels{0, 1, 0};
  const std::vector<double> p{0.2, 0.9, 0.6};
  const double alpha = 1.0;

  std::vector<std::size_t> order{0, 1, 2};
  const std::vector<double> same(3, alpha);
  const double base = joint_assignment_log_prob(order, labels, p, alpha, same);
  bool invariant = true;
  do {
    invariant = invariant && joint_assignment_log_prob(order, labels, p, alpha, same) == base;
  } while (std::next_permutation(order.begin(), order.end()));

  const std::vector<double> star{200.0, 150.0, 120.0};
  order = {0, 1, 2};
  const double ref = joint_assignment_log_prob(order, labels, p, alpha, star);
  double max_gap = 0.0;
  do {
    max_gap = std::max(max_gap, std::abs(joint_assignment_log_prob(order, labels, p, alpha, star) - ref));
  } while (std::next_permutation(order.begin(), order.end()));

  return {invariant && max_gap > 1e-9,
          fmt::format("alpha*=alpha identical over 6 orders: {}; alpha*>>alpha max log-prob gap {:.4g}",
                      invariant ? "yes" : "no", max_gap)};
}

Verdict gpd_recovery() {
  Verdict v{true, ""};
  RandomSource rng(42);
  for (double xi : {0.0, 0.3}) {
    for (double beta : {1.0, 2.0}) {
      const GPDTailFit fit = fit_gpd(oracle::gpd_sample(xi, beta, 10000, rng));
      const bool ok = std::abs(fit.xi - xi) <= 0.1 && std::abs(fit.beta / beta - 1.0) <= 0.15;
      v.pass = v.pass && ok;
      v.detail += fmt::format(" ({},{})->({:.3f},{:.3f})", xi, beta, fit.xi, fit.beta);
    }
  }
  return v;
}

Verdict conjugacy_oracle() {
  RandomSource rng(42);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const oracle::Niw1 p{4.0 * rng.uniform() - 2.0, 0.1 + 4.0 * rng.uniform(), 1.2 + 12.0 * rng.uniform(),
                         0.2 + 4.0 * rng.uniform()};
    const double x = p.mu0 + 8.0 * rng.uniform() - 4.0;
    NIWParams n;
    n.mu0 = v1(p.mu0);
    n.kappa0 = p.kappa0;
    n.nu0 = p.nu0;
    n.psi = Matrix::Constant(1, 1, p.psi);
    worst = std::max(worst, std::abs(log_predictive(v1(x), n) - oracle::log_predictive_quadrature(x, p)));
  }
  return {worst <= 1e-6, fmt::format("max |log_predictive - quadrature| over 20 configs = {:.3g}", worst)};
}

LabeledDataset synthetic_dataset(const Settings& s, const testing::TempDir& dir) {
  RandomSource rng(s.seed);
  write_dataset_csv(generate_synthetic(s.synthetic, rng), dir / "dataset.csv");
  return load_csv(dir / "dataset.csv", s.schema);
}

Verdict synthetic_batch() {
  testing::TempDir dir;
  const Settings s;
  const LabeledDataset data = synthetic_dataset(s, dir);
  const BatchOutcome res = run_batch(s, data);
  audit_small_clusters(res.state, s.small_cluster_frac);
  std::size_t big = 0;
  for (const auto& c : res.state.clusters()) big += c.size() > 20 ? 1 : 0;
  const Metrics& m = *res.metrics;
  return {big >= 4 && big <= 6 && m.f_measure >= 0.80,
          fmt::format("{} clusters of size > 20 ({} total); precision {:.3f} recall {:.3f} f_measure {:.3f}", big,
                      res.state.num_clusters(), m.precision, m.recall, m.f_measure)};
}

Verdict streaming_evolution() {
  testing::TempDir dir;
  const Settings s;
  const LabeledDataset data = synthetic_dataset(s, dir);
  const auto& ids = *data.cluster_ids;
  const std::size_t prefix = 300 + s.synthetic.n_anomalies;
  for (std::size_t i = prefix; i < data.size(); ++i) {
    if (ids[i] != 4) return {false, "generator did not place the fourth cluster last"};
  }

  std::vector<std::string> early;
  bool early_ok = true;
  const StreamOutcome res = run_stream(s, data, prefix, [&](const StreamState& st, const UpdateReport& r) {
    const std::size_t arrived = r.index - prefix + 1;
    if (arrived > 10) return;
    const auto flags = classified_flags(st.model, s.small_cluster_frac);
    std::size_t flagged = 0;
    for (std::size_t i = prefix; i <= r.index; ++i) flagged += flags[i];
    early_ok = early_ok && 2 * flagged > arrived;
    early.push_back(fmt::format("{}/{}", flagged, arrived));
  });
  audit_small_clusters(res.state.model, s.small_cluster_frac);

  const ModelState& m = res.state.model;
  std::size_t flagged = 0;
  std::map<int, std::size_t> home;
  for (std::size_t i = prefix; i < data.size(); ++i) {
    flagged += m.flag(i) ? 1 : 0;
    ++home[m.assignment(i)];
  }
  const auto main = std::max_element(home.begin(), home.end(), [](auto& a, auto& b) { return a.second < b.second; });
  const std::size_t main_size = m.cluster(static_cast<std::size_t>(main->first)).size();
  const bool large = static_cast<double>(main_size) > s.small_cluster_frac * static_cast<double>(m.num_points());
  const std::size_t n4 = data.size() - prefix;
  const bool late_ok = 2 * flagged < n4 && large;
  std::string trace;
  for (const auto& e : early) trace += " " + e;
  return {early_ok && late_ok,
          fmt::format("classified anomalous after arrivals 1-10:{}; after all {}: {}/{} flagged, home cluster size {}",
                      trace, n4, flagged, n4, main_size)};
}

Verdict small_cluster_rule() {
  return {g_states_checked > 0 && g_violations == 0,
          fmt::format("{} violations across {} finalized states", g_violations, g_states_checked)};
}

Verdict sensitivity_sweep() {
  testing::TempDir dir;
  const Settings s;
  const LabeledDataset data = synthetic_dataset(s, dir);
  std::vector<SensitivityRow> rows;
  for (double f : s.fractions) {
    const StreamOutcome res = run_stream(s, data, batch_prefix_size(data.size(), f));
    audit_small_clusters(res.state.model, s.small_cluster_frac);
    rows.push_back({f, *res.metrics, res.state.model.num_clusters()});
  }
  write_sensitivity_csv(rows, "acceptance_sensitivity.csv");
  auto at = [&](double f) {
    for (const auto& r : rows)
      if (std::abs(r.fraction - f) < 1e-12) return r.metrics.f_measure;
    return std::nan("");
  };
  const bool timed = std::all_of(rows.begin(), rows.end(), [](const SensitivityRow& r) { return r.metrics.runtime_seconds > 0.0; });
  const double gap = std::abs(at(0.75) - at(0.9));
  std::string table;
  for (const auto& r : rows) table += fmt::format(" {:g}:{:.3f}", r.fraction, r.metrics.f_measure);
  return {gap <= 0.05 && timed, fmt::format("f_measure by fraction{}; |f(0.75) - f(0.9)| = {:.3f}", table, gap)};
}

Verdict determinism() {
  testing::TempDir dir;
  CommandOptions sim;
  sim.command = "simulate";
  sim.out = dir.path();
  if (run_command(sim) != kExitOk) return {false, "simulate failed"};
  std::string detail;
  bool ok = true;
  for (const char* cmd : {"batch", "stream"}) {
    std::array<std::string, 2> bytes;
    for (int k = 0; k < 2; ++k) {
      testing::TempDir out;
      CommandOptions o;
      o.command = cmd;
      o.input = dir / "dataset.csv";
      o.out = out.path();
      o.seed = 42;
      if (run_command(o) != kExitOk) return {false, fmt::format("{} run failed", cmd)};
      bytes[k] = testing::slurp(out / "results.jsonl");
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    ok = ok && same;
    detail += fmt::format(" {}: {} ({} bytes)", cmd, same ? "identical" : "DIFFERENT", bytes[0].size());
  }
  return {ok, "results.jsonl across two runs:" + detail};
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  configure_logging();
  // Criterion 7 audits the states produced by 5, 6 and 8, so it runs after them.
  const std::vector<Criterion> criteria{
      {"1 crp-reduction", 60.0, crp_reduction},
      {"2 non-exchangeability", 1.0, non_exchangeability},
      {"3 gpd-recovery", 10.0, gpd_recovery},
      {"4 conjugacy-oracle", 10.0, conjugacy_oracle},
      {"5 synthetic-batch", 300.0, synthetic_batch},
      {"6 streaming-evolution", 300.0, streaming_evolution},
      {"8 sensitivity-plateau", 1800.0, sensitivity_sweep},
      {"7 small-cluster-rule", 1.0, small_cluster_rule},
      {"9 determinism", 600.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = v.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] criterion %s (%.2f s, limit %.0f s%s): %s\n", pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, in_time ? "" : ", EXCEEDED", v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
