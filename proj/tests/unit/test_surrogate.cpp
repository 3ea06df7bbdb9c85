#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "topogen/surrogate.hpp"

using namespace topogen;
using namespace topogen::nn;

namespace {

Mlp random_net(std::size_t in, std::size_t hidden, Rng& rng) {
  Mlp net(in, hidden);
  net.initialize(rng);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Eigen::Index i = 0; i < net.b1.size(); ++i) net.b1(i) = n(rng);
  net.b2 = n(rng);
  return net;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Random binary chromosomes with fitness 10 + w·x.
struct LinearProblem {
  std::vector<Chromosome> xs;
  std::vector<double> ys;
  std::vector<double> w;
};

LinearProblem linear_problem(std::size_t n, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  LinearProblem p;
  for (std::size_t j = 0; j < width; ++j) p.w.push_back(weight(rng));
  for (std::size_t i = 0; i < n; ++i) {
    Chromosome c(width);
    double y = 10.0;
    for (std::size_t j = 0; j < width; ++j)
      if (coin(rng)) {
        c.set(j);
        y += p.w[j];
      }
    p.xs.push_back(c);
    p.ys.push_back(y);
  }
  return p;
}

double sample_mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("forward pass") {
  Mlp zero(4, 8);
  const std::vector<double> x = {1, 0, 1, 1};
  CHECK(zero.forward(x) == 0.0);
  CHECK(zero.parameter_count() == 4 * 8 + 8 + 8 + 1);

  Rng rng(1);
  const Mlp net = random_net(4, 8, rng);
  CHECK(net.forward(x, Mode::train, 0.0, nullptr) == net.forward(x, Mode::inference));
  CHECK_THROWS_AS(net.forward(std::vector<double>{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(net.forward(x, Mode::train, 0.5, nullptr), std::invalid_argument);

  // Hand computation: relu(W1 x + b1) · w2 + b2.
  double expected = net.b2;
  for (Eigen::Index h = 0; h < 8; ++h) {
    double a = net.b1(h);
    for (Eigen::Index j = 0; j < 4; ++j) a += net.w1(h, j) * x[static_cast<std::size_t>(j)];
    expected += net.w2(h) * std::max(0.0, a);
  }
  CHECK(net.forward(x) == doctest::Approx(expected).epsilon(1e-12));

  const Eigen::MatrixXd batch = random_matrix(5, 4, rng);
  const auto out = net.forward_batch(batch);
  for (Eigen::Index r = 0; r < 5; ++r) {
    const Eigen::VectorXd row = batch.row(r).transpose();
    CHECK(out(r) == doctest::Approx(net.forward({row.data(), 4})).epsilon(1e-12));
  }
}

TEST_CASE("dropout scales survivors") {
  Rng rng(2);
  Mlp net(1, 64);
  net.w1.setConstant(1.0);
  net.w2.setConstant(1.0);
  const std::vector<double> x = {1.0};
  double total = 0;
  for (int t = 0; t < 2000; ++t) {
    const double y = net.forward(x, Mode::train, 0.25, &rng);
    // Each surviving unit contributes 1 / 0.75.
    const double units = y * 0.75;
    CHECK(std::abs(units - std::round(units)) < 1e-9);
    total += y;
  }
  CHECK(total / 2000 == doctest::Approx(64.0).epsilon(0.02));
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(2024);
  const double h = 1e-4;
  for (int config = 0; config < 20; ++config) {
    std::uniform_int_distribution<int> in_w(1, 12), hid(1, 16), batch(1, 10);
    const auto in = static_cast<std::size_t>(in_w(rng));
    Mlp net = random_net(in, static_cast<std::size_t>(hid(rng)), rng);
    const auto rows = batch(rng);
    const Eigen::MatrixXd x = random_matrix(rows, static_cast<Eigen::Index>(in), rng);
    const Eigen::VectorXd y = random_matrix(rows, 1, rng);
    Gradients g;
    loss_and_gradients(net, x, y, &g);

    double worst = 0;
    const auto check = [&](double& param, double analytic) {
      const double keep = param;
      param = keep + h;
      const double up = loss_and_gradients(net, x, y, nullptr);
      param = keep - h;
      const double down = loss_and_gradients(net, x, y, nullptr);
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
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("gradient clipping") {
  Gradients g;
  g.w1 = Eigen::MatrixXd::Constant(2, 2, 3.0);
  g.b1 = Eigen::VectorXd::Constant(2, 3.0);
  g.w2 = Eigen::VectorXd::Constant(2, 3.0);
  g.b2 = 3.0;
  const double before = g.norm();
  CHECK(before == doctest::Approx(9.0));
  CHECK(clip_gradients(g, 2.0) == doctest::Approx(9.0));
  CHECK(g.norm() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.b2 == doctest::Approx(3.0 * 2.0 / 9.0));
  clip_gradients(g, 5.0);
  CHECK(g.norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("hyperparameter sampling stays in range") {
  Rng rng(3);
  std::set<std::size_t> batches, hidden;
  for (int t = 0; t < 2000; ++t) {
    const auto hp = Hyperparams::sample(rng);
    CHECK_NOTHROW(hp.validate());
    CHECK(hp.learning_rate >= 1e-4);
    CHECK(hp.learning_rate <= 1e-2);
    CHECK(hp.weight_decay >= 1e-4);
    CHECK(hp.weight_decay <= 1e-2);
    CHECK(hp.dropout_rate >= 0);
    CHECK(hp.dropout_rate <= 0.5);
    CHECK(hp.grad_clip_norm >= 1);
    CHECK(hp.grad_clip_norm <= 10);
    batches.insert(hp.batch_size);
    hidden.insert(hp.hidden_units);
  }
  CHECK(batches == std::set<std::size_t>{8, 16, 32});
  CHECK(hidden == std::set<std::size_t>{8, 16, 32, 64, 128});

  Hyperparams bad;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pair sampler includes self pairs") {
  Rng rng(4);
  const auto pairs = sample_pairs(3, 2000, rng);
  std::set<std::pair<std::size_t, std::size_t>> seen(pairs.begin(), pairs.end());
  CHECK(seen.size() == 9);
  CHECK(seen.contains({1, 1}));
  CHECK_THROWS_AS(sample_pairs(0, 1, rng), std::invalid_argument);
}

TEST_CASE("training fits a constant zero target") {
  Rng rng(5);
  std::vector<Chromosome> xs;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 40; ++i) {
    Chromosome c(10);
    for (std::size_t j = 0; j < 10; ++j) c.set(j, coin(rng));
    xs.push_back(c);
  }
  const std::vector<double> ys(40, 0.0);
  const auto data = make_dataset(xs, ys);
  Hyperparams hp;
  hp.weight_decay = 0;
  hp.learning_rate = 1e-2;
  hp.dropout_rate = 0;
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.patience = 1000;
  const auto fitted = fit(Variant::feedforward, data, {}, hp, cfg);
  double mse = 0;
  for (const auto& c : xs) mse += std::pow(fitted.model.predict_feedforward(c).mean, 2);
  CHECK(mse / 40 < 1e-6);
}

TEST_CASE("feedforward training recovers a linear function") {
  const auto p = linear_problem(200, 16, 6);
  const auto data = make_dataset(p.xs, p.ys);
  Hyperparams hp;
  hp.learning_rate = 3e-3;
  hp.hidden_units = 32;
  hp.weight_decay = 1e-4;
  TrainConfig cfg;
  cfg.seed = 3;
  const auto fitted = train(Variant::feedforward, data, hp, cfg);
  // Validation loss is reported in standardized units, i.e. as a fraction of the target variance.
  CHECK(fitted.report.best_val_loss < 0.01);
  CHECK(fitted.report.epochs.size() <= 1000);

  SUBCASE("early stopping keeps the best epoch") {
    double best = 1e300;
    for (const auto& e : fitted.report.epochs) best = std::min(best, e.val_loss);
    CHECK(fitted.report.best_val_loss == best);
    CHECK(fitted.report.epochs.at(fitted.report.best_epoch - 1).val_loss == best);
  }
  SUBCASE("training is reproducible") {
    const auto again = train(Variant::feedforward, data, hp, cfg);
    CHECK(again.model.net().w1 == fitted.model.net().w1);
    CHECK(again.model.net().b2 == fitted.model.net().b2);
  }
  SUBCASE("snapshot roundtrip") {
    const auto restored = Surrogate::from_json(fitted.model.to_json());
    CHECK(restored.hyperparams() == hp);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(restored.predict_feedforward(p.xs[i]).mean == fitted.model.predict_feedforward(p.xs[i]).mean);
    CHECK_THROWS_AS(Surrogate::from_json("{\"variant\": 3}"), std::invalid_argument);
  }
  SUBCASE("report csv") {
    const auto csv = fitted.report.to_csv();
    CHECK(csv.rfind("epoch,train_loss,val_loss\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == fitted.report.epochs.size() + 1);
  }
  SUBCASE("width checks") {
    CHECK(fitted.model.predict_feedforward(p.xs[0]).std == std::nullopt);
    CHECK_THROWS_AS(fitted.model.predict_feedforward(Chromosome(15)), std::invalid_argument);
  }
}

TEST_CASE("training input checks") {
  const auto p = linear_problem(4, 5, 1);
  CHECK_THROWS_AS(train(Variant::feedforward, make_dataset(p.xs, p.ys), {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_dataset(p.xs, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("pairwise aggregation with an all-zero network") {
  Surrogate zero(Variant::pairwise, Mlp(2 * 6, 8), {}, 0.0, 3.7);
  Rng rng(9);
  std::vector<Reference> refs;
  std::vector<double> fitness;
  std::uniform_real_distribution<double> f(10, 50);
  for (int i = 0; i < 12; ++i) {
    Chromosome c(6);
    c.set(static_cast<std::size_t>(i % 6));
    refs.push_back({c, f(rng)});
    fitness.push_back(refs.back().fitness);
  }
  const auto pred = zero.predict_pairwise(Chromosome(6), refs, 30, rng);
  CHECK(pred.mean == sample_mean(fitness));
  CHECK(*pred.std == sample_std(fitness));

  const std::vector<Reference> two = {{Chromosome(6), 7.0}, {Chromosome(6), 9.0}};
  const auto p2 = zero.predict_pairwise(Chromosome(6), two, 2, rng);
  CHECK(p2.mean == 8.0);
  CHECK(*p2.std == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  // A subset of η references is drawn without replacement.
  const auto sub = zero.predict_pairwise(Chromosome(6), refs, 5, rng);
  CHECK(*sub.std >= 0);
  CHECK_THROWS_AS(zero.predict_pairwise(Chromosome(6), std::vector<Reference>{two[0]}, 2, rng), std::invalid_argument);
  CHECK_THROWS_AS(zero.predict_pairwise(Chromosome(6), two, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(zero.predict_feedforward(Chromosome(6)), std::logic_error);
}

TEST_CASE("pairwise surrogate on a linear fitness") {
  const auto p = linear_problem(300, 12, 21);
  std::vector<Chromosome> train_x(p.xs.begin(), p.xs.begin() + 250);
  std::vector<double> train_y(p.ys.begin(), p.ys.begin() + 250);
  Hyperparams hp;
  hp.learning_rate = 3e-3;
  hp.hidden_units = 64;
  TrainConfig cfg;
  cfg.seed = 2;
  const auto fitted = train(Variant::pairwise, make_dataset(train_x, train_y), hp, cfg);
  CHECK(fitted.model.chromosome_width() == 12);

  std::vector<Reference> refs;
  for (std::size_t i = 0; i < train_x.size(); ++i) refs.push_back({train_x[i], train_y[i]});
  const double range = *std::max_element(p.ys.begin(), p.ys.end()) - *std::min_element(p.ys.begin(), p.ys.end());
  Rng rng(1);
  double err = 0;
  for (std::size_t u = 250; u < 300; ++u) err += std::abs(fitted.model.predict_pairwise(p.xs[u], refs, 30, rng).mean - p.ys[u]);
  CHECK(err / 50 < 0.05 * range);
}

TEST_CASE("probability of improvement") {
  const auto pb = [](double mean, std::optional<double> sd, double best, Sense s) {
    return prob_better_than_best({mean, sd}, best, s);
  };
  CHECK(pb(10, 2.0, 10, Sense::minimize) == doctest::Approx(0.5));
  CHECK(pb(9, 1.0, 10, Sense::minimize) == doctest::Approx(0.841344746068543).epsilon(1e-12));
  CHECK(pb(11, 1.0, 10, Sense::maximize) == doctest::Approx(0.841344746068543).epsilon(1e-12));
  CHECK(pb(9, 0.0, 10, Sense::minimize) == 1.0);
  CHECK(pb(10, 0.0, 10, Sense::minimize) == 0.0);
  CHECK(pb(9, 1e-12, 10, Sense::minimize) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pb(9, std::nullopt, 10, Sense::minimize), std::invalid_argument);

  double last = 0;
  for (double mean = 14; mean >= 6; mean -= 0.5) {
    const double v = pb(mean, 1.5, 10, Sense::minimize);
    CHECK(v >= last);
    last = v;
  }
  // Wider spread pulls toward one half from either side.
  CHECK(std::abs(pb(9, 5.0, 10, Sense::minimize) - 0.5) < std::abs(pb(9, 1.0, 10, Sense::minimize) - 0.5));
  CHECK(std::abs(pb(11, 5.0, 10, Sense::minimize) - 0.5) < std::abs(pb(11, 1.0, 10, Sense::minimize) - 0.5));
}

TEST_CASE("hyperparameter tuning") {
  const auto p = linear_problem(120, 10, 8);
  const auto data = make_dataset(p.xs, p.ys);
  TrainConfig base;
  base.max_epochs = 150;

  SUBCASE("single trial returns its sampled configuration") {
    const auto r = tune(data, Variant::feedforward, 1, 5, base);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.best == r.trials[0].hp);
    CHECK(r.best_trial == 0);
  }
  SUBCASE("identical trials return that configuration") {
    Hyperparams fixed;
    fixed.hidden_units = 16;
    const auto r = tune(data, Variant::feedforward, 4, 5, base, [&](Rng&) { return fixed; });
    CHECK(r.best == fixed);
  }
  SUBCASE("winner is the argmin") {
    const auto r = tune(data, Variant::feedforward, 8, 11, base);
    std::vector<double> losses;
    for (const auto& t : r.trials) losses.push_back(t.val_loss);
    CHECK(r.trials[r.best_trial].val_loss == *std::min_element(losses.begin(), losses.end()));
    std::nth_element(losses.begin(), losses.begin() + 4, losses.end());
    CHECK(r.trials[r.best_trial].val_loss <= losses[4]);
    for (std::size_t t = 0; t < r.best_trial; ++t) CHECK(r.trials[t].val_loss > r.trials[r.best_trial].val_loss);
  }
  SUBCASE("too little data") {
    const auto small = linear_problem(9, 4, 1);
    CHECK_THROWS_AS(tune(make_dataset(small.xs, small.ys), Variant::feedforward, 2, 1), std::invalid_argument);
  }
}
