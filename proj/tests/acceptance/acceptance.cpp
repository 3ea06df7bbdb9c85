// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//
// Every stochastic experiment uses 30 runs with master seed 1 (per-run seeds from run_seed).
// Output goes to ./acceptance_out relative to the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "topogen/harness.hpp"
#include "topogen/loop_layout.hpp"
#include "topogen/surrogate.hpp"

using namespace topogen;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMasterSeed = 1;
constexpr std::size_t kRuns = 30;

int failures = 0;

void verdict(int id, bool ok, const std::string& title, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path out_root = "acceptance_out";

fs::path oracle_path(int n) { return out_root / ("oracle_" + std::to_string(n) + ".csv"); }

void write_oracle(int n, const fs::path& path) {
  const auto bench = loop::generate_design_space(n);
  const auto oracle = harness::loop_oracle(bench, {}, kMasterSeed);
  std::ofstream out(path, std::ios::binary);
  harness::write_oracle_csv(out, oracle);
}

struct Outcome {
  runlog::Aggregate aggregate;
  std::size_t space = 0;
  fs::path dir;

  double mean() const { return aggregate.mean_evaluations.value_or(INFINITY); }
  double fraction() const { return mean() / static_cast<double>(space); }
  std::string describe() const {
    return fmt("%zu/%zu successes, mean %.1f evaluations (%.3f%% of %zu)", aggregate.successes, aggregate.runs,
               mean(), 100 * fraction(), space);
  }
};

Outcome experiment(const std::string& algorithm, int n, std::size_t runs = kRuns, const std::string& tag = "") {
  if (!fs::exists(oracle_path(n))) write_oracle(n, oracle_path(n));
  std::ostringstream text;
  text << R"({"benchmark": {"type": "loop", "machines": )" << n << R"(, "oracle": ")"
       << fs::absolute(oracle_path(n)).string() << R"("}, "algorithm": ")" << algorithm << R"(", "runs": )" << runs
       << R"(, "master_seed": )" << kMasterSeed << "}";
  auto cfg = harness::ExperimentConfig::from_json(text.str());
  cfg.output_dir = out_root / (algorithm + "_loop" + std::to_string(n) + tag);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = harness::run_experiment(cfg);
  Outcome o{result.aggregate, result.design_space_size, cfg.output_dir};
  std::fprintf(stderr, "  %s loop(%d)%s: %s in %.1fs\n", algorithm.c_str(), n, tag.c_str(), o.describe().c_str(),
               seconds_since(t0));
  return o;
}

void criterion_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  write_oracle(6, oracle_path(6));
  const double elapsed = seconds_since(t0);
  const fs::path again = out_root / "oracle_6_rerun.csv";
  write_oracle(6, again);
  const std::string a = slurp(oracle_path(6));
  const bool same = a == slurp(again);
  const auto rows = std::count(a.begin(), a.end(), '\n') - 1;
  verdict(1, elapsed < 300 && same && rows == 720, "exhaustive oracle loop(6)",
          fmt("%ld designs in %.1fs, rerun %s", static_cast<long>(rows), elapsed,
              same ? "byte-identical" : "differs"));
}

void criterion_threshold(int id, const std::string& title, const Outcome& o, double max_mean) {
  const bool ok = o.aggregate.successes >= 27 && o.aggregate.runs == kRuns && o.mean() <= max_mean;
  verdict(id, ok, title, o.describe() + fmt(", limit 27/30 and %.0f", max_mean));
}

void criterion_gradients() {
  Rng rng(20240917);
  const double h = 1e-4;
  double worst = 0;
  for (int config = 0; config < 20; ++config) {
    std::uniform_int_distribution<int> in_w(1, 24), hid(1, 32), batch(1, 16);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto in = static_cast<std::size_t>(in_w(rng));
    nn::Mlp net(in, static_cast<std::size_t>(hid(rng)));
    net.initialize(rng);
    for (Eigen::Index i = 0; i < net.b1.size(); ++i) net.b1(i) = 0.3 * normal(rng);
    net.b2 = normal(rng);
    const auto rows = batch(rng);
    Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(in));
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
      y(i) = normal(rng);
    }
    nn::Gradients g;
    nn::loss_and_gradients(net, x, y, &g);
    const auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = nn::loss_and_gradients(net, x, y, nullptr);
      param = keep - h;
      const double down = nn::loss_and_gradients(net, x, y, nullptr);
      param = keep;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (Eigen::Index i = 0; i < net.w1.rows(); ++i)
      for (Eigen::Index j = 0; j < net.w1.cols(); ++j) check(net.w1(i, j), g.w1(i, j));
    for (Eigen::Index i = 0; i < net.b1.size(); ++i) check(net.b1(i), g.b1(i));
    for (Eigen::Index i = 0; i < net.w2.size(); ++i) check(net.w2(i), g.w2(i));
    check(net.b2, g.b2);
  }
  verdict(7, worst < 1e-4, "gradient check", fmt("20 configurations, worst relative error %.2e", worst));
}

void criterion_pairwise() {
  // All-zero network: prediction is the reference sample mean and std.
  nn::Surrogate zero(nn::Variant::pairwise, nn::Mlp(2 * 8, 16), {}, 0.0, 2.5);
  Rng rng(5);
  std::uniform_real_distribution<double> uniform(20, 60);
  std::vector<nn::Reference> refs;
  double sum = 0;
  for (int i = 0; i < 25; ++i) {
    Chromosome c(8);
    c.set(static_cast<std::size_t>(i % 8));
    refs.push_back({c, uniform(rng)});
    sum += refs.back().fitness;
  }
  const double mean = sum / 25;
  double ss = 0;
  for (const auto& r : refs) ss += (r.fitness - mean) * (r.fitness - mean);
  const double sd = std::sqrt(ss / 24);
  const auto zp = zero.predict_pairwise(Chromosome(8), refs, 25, rng);
  const bool exact = zp.mean == mean && zp.std && *zp.std == sd;

  // Linear fitness 10 + w·x over random chromosomes; 250 training points, 50 held out.
  const std::size_t width = 12, total = 300, train_n = 250;
  Rng data_rng(21);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> w;
  for (std::size_t j = 0; j < width; ++j) w.push_back(weight(data_rng));
  std::vector<Chromosome> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < total; ++i) {
    Chromosome c(width);
    double v = 10.0;
    for (std::size_t j = 0; j < width; ++j)
      if (coin(data_rng)) {
        c.set(j);
        v += w[j];
      }
    xs.push_back(c);
    ys.push_back(v);
  }
  const auto data = nn::make_dataset(std::span(xs).first(train_n), std::span(ys).first(train_n));
  nn::Hyperparams hp;
  hp.learning_rate = 3e-3;
  hp.hidden_units = 64;
  nn::TrainConfig cfg;
  cfg.seed = 2;
  const auto fitted = nn::train(nn::Variant::pairwise, data, hp, cfg);

  // Training MSE over all ordered training pairs, standardized units.
  const auto& net = fitted.model.net();
  Eigen::MatrixXd pairs(static_cast<Eigen::Index>(train_n * train_n), static_cast<Eigen::Index>(2 * width));
  Eigen::VectorXd diffs(pairs.rows());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < train_n; ++i)
    for (std::size_t u = 0; u < train_n; ++u, ++row) {
      for (std::size_t j = 0; j < width; ++j) {
        pairs(row, static_cast<Eigen::Index>(j)) = xs[i].test(j) ? 1.0 : 0.0;
        pairs(row, static_cast<Eigen::Index>(width + j)) = xs[u].test(j) ? 1.0 : 0.0;
      }
      diffs(row) = (ys[u] - ys[i]) / fitted.model.target_scale();
    }
  const double mse = (net.forward_batch(pairs) - diffs).squaredNorm() / static_cast<double>(diffs.size());

  std::vector<nn::Reference> train_refs;
  for (std::size_t i = 0; i < train_n; ++i) train_refs.push_back({xs[i], ys[i]});
  const double range = *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
  Rng pred_rng(1);
  double err = 0;
  for (std::size_t u = train_n; u < total; ++u)
    err += std::abs(fitted.model.predict_pairwise(xs[u], train_refs, 30, pred_rng).mean - ys[u]);
  err /= static_cast<double>(total - train_n);
  verdict(8, exact && mse < 1e-3 && err < 0.05 * range, "pairwise aggregation",
          fmt("zero network %s; trained pair MSE %.2e, held-out error %.3f vs limit %.3f",
              exact ? "exact" : "inexact", mse, err, 0.05 * range));
}

void criterion_selection() {
  const std::size_t pool = 10, draws = 100000;
  std::vector<double> scores(pool);
  for (std::size_t i = 0; i < pool; ++i) scores[i] = static_cast<double>(i);  // index 0 is worst
  const RankSelectConfig cfg{1.3, Sense::maximize};
  std::vector<std::size_t> counts(pool, 0);
  Rng rng(77);
  for (std::size_t d = 0; d < draws; ++d) ++counts[rank_select_one(scores, cfg, rng)];
  const auto probs = rank_probabilities(1.3, pool);
  double total_weight = 0;
  for (std::size_t r = 1; r <= pool; ++r) total_weight += exp_rank_weight(r, 1.3, pool);
  bool ok = counts[0] == 0;
  double worst_sigma = 0;
  for (std::size_t r = 1; r <= pool; ++r) {
    const std::size_t item = r - 1;
    const double p = exp_rank_weight(r, 1.3, pool) / total_weight;
    ok = ok && std::abs(p - probs[r - 1]) < 1e-12;
    const double sigma = std::sqrt(static_cast<double>(draws) * p * (1 - p));
    const double dev = std::abs(static_cast<double>(counts[item]) - static_cast<double>(draws) * p);
    if (sigma > 0) worst_sigma = std::max(worst_sigma, dev / sigma);
    ok = ok && dev <= 3 * sigma;
  }
  verdict(9, ok, "rank selection distribution",
          fmt("worst deviation %.2f sigma, rank-1 item drawn %zu times", worst_sigma, counts[0]));
}

void criterion_des() {
  loop::LoopParams p;
  p.horizon = 20;
  loop::LoopModel hand(loop::LoopDesign{{1}}, p, 1);
  hand.run();
  std::vector<double> cycles;
  for (std::size_t i = 0; i < 3 && i < hand.parts().size(); ++i)
    if (hand.parts()[i].exit_time) cycles.push_back(*hand.parts()[i].exit_time - hand.parts()[i].arrival_time);
  const bool trace_ok = cycles == std::vector<double>{7, 8, 9};

  std::size_t violations = 0;
  Rng rng(3);
  std::vector<int> order = {1, 2, 3};
  std::uniform_real_distribution<double> horizon(50, 2000);
  for (int k = 0; k < 1000; ++k) {
    std::shuffle(order.begin(), order.end(), rng);
    loop::LoopParams q;
    q.horizon = horizon(rng);
    loop::LoopModel model(loop::LoopDesign{order}, q, rng());
    model.run();
    std::size_t exited = 0;
    for (const auto& part : model.parts()) {
      if (part.exit_time) {
        ++exited;
        if (*part.exit_time < part.arrival_time || part.next_step != part.plan.size()) ++violations;
      }
    }
    if (exited + model.parts_in_system() != model.parts().size()) ++violations;
    for (const auto& s : model.machine_stats())
      if (s.max_queue > q.buffer_capacity) ++violations;
  }
  verdict(10, trace_ok && violations == 0, "DES hand trace and invariants",
          fmt("loop(1) cycle times %s; %zu invariant violations over 1000 loop(3) runs",
              trace_ok ? "[7, 8, 9]" : "wrong", violations));
}

void criterion_roundtrip() {
  const auto six = loop::generate_design_space(6);
  std::size_t bad = 0;
  for (DesignId id = 0; id < six.space.size(); ++id) {
    const auto& c = six.space.chromosome(id);
    if (!(decode(c, six.space) == six.space.design(id)) || !(encode(six.space.design(id), six.space) == c)) ++bad;
  }
  const auto four = loop::generate_design_space(4);
  const auto& s = four.space;
  std::size_t axiom_failures = 0;
  for (DesignId a = 0; a < s.size(); ++a)
    for (DesignId b = 0; b < s.size(); ++b) {
      const auto ab = hamming(s.chromosome(a), s.chromosome(b));
      if ((ab == 0) != (a == b) || ab != hamming(s.chromosome(b), s.chromosome(a))) ++axiom_failures;
      for (DesignId c = 0; c < s.size(); ++c)
        if (ab > hamming(s.chromosome(a), s.chromosome(c)) + hamming(s.chromosome(c), s.chromosome(b)))
          ++axiom_failures;
    }
  verdict(11, six.space.size() == 720 && bad == 0 && axiom_failures == 0, "roundtrip and Hamming metric",
          fmt("%zu/720 roundtrip failures, %zu metric axiom failures on loop(4)", bad, axiom_failures));
}

bool same_logs(const fs::path& a, const fs::path& b, std::size_t runs, std::size_t* compared) {
  for (std::size_t k = 0; k < runs; ++k) {
    const auto name = "run_" + std::to_string(k) + ".jsonl";
    const auto la = slurp(a / name);
    if (la.empty() || la != slurp(b / name)) return false;
    ++*compared;
  }
  return true;
}

}  // namespace

int main() {
  fs::remove_all(out_root);
  fs::create_directories(out_root);
  const auto t0 = std::chrono::steady_clock::now();

  criterion_oracle();

  std::map<int, Outcome> ga, nn;
  for (int n : {6, 7, 8}) {
    ga[n] = experiment("ga", n);
    nn[n] = experiment("nn-ga", n);
  }
  criterion_threshold(2, "GA loop(6)", ga[6], 330);
  criterion_threshold(3, "GA loop(7)", ga[7], 560);
  criterion_threshold(4, "NN-GA feedforward loop(6)", nn[6], 350);

  const auto decreasing = [](std::map<int, Outcome>& m) {
    return m[6].fraction() > m[7].fraction() && m[7].fraction() > m[8].fraction();
  };
  const auto trend = [](std::map<int, Outcome>& m) {
    return fmt("%.2f%% > %.2f%% > %.3f%%", 100 * m[6].fraction(), 100 * m[7].fraction(), 100 * m[8].fraction());
  };
  verdict(5, decreasing(ga) && decreasing(nn), "scalability trend",
          "GA " + trend(ga) + "; NN-GA " + trend(nn));
  verdict(6, nn[8].mean() < ga[8].mean(), "surrogate advantage loop(8)",
          fmt("NN-GA mean %.1f vs GA mean %.1f", nn[8].mean(), ga[8].mean()));

  criterion_gradients();
  criterion_pairwise();
  criterion_selection();
  criterion_des();
  criterion_roundtrip();

  std::size_t compared = 0;
  const auto ga_again = experiment("ga", 6, kRuns, "_rerun");
  const auto nn_again = experiment("nn-ga", 6, 3, "_rerun");
  const bool identical = same_logs(ga[6].dir, ga_again.dir, kRuns, &compared) &&
                         same_logs(nn[6].dir, nn_again.dir, 3, &compared);
  verdict(12, identical, "end-to-end determinism",
          fmt("%zu run logs compared, %s", compared, identical ? "all byte-identical" : "mismatch"));

  std::printf("%d failing criteria, %.0fs total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
