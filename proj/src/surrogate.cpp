#include "topogen/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace topogen::nn {

const char* to_string(Variant v) noexcept { return v == Variant::feedforward ? "feedforward" : "pairwise"; }

Variant parse_variant(const std::string& s) {
  if (s == "feedforward") return Variant::feedforward;
  if (s == "pairwise") return Variant::pairwise;
  throw std::invalid_argument("unknown surrogate variant '" + s + "'");
}

void Hyperparams::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (hidden_units == 0) throw std::invalid_argument("hidden units must be positive");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!(weight_decay >= 0)) throw std::invalid_argument("weight decay must be nonnegative");
  if (!(grad_clip_norm > 0)) throw std::invalid_argument("gradient clipping norm must be positive");
}

Hyperparams Hyperparams::sample(Rng& rng) {
  std::uniform_real_distribution<double> exponent(-4.0, -2.0);
  std::uniform_int_distribution<int> batch_pick(0, 2);
  std::uniform_int_distribution<int> hidden_pow(3, 7);
  std::uniform_real_distribution<double> dropout(0.0, 0.5);
  std::uniform_real_distribution<double> clip(1.0, 10.0);
  Hyperparams hp;
  hp.learning_rate = std::pow(10.0, exponent(rng));
  hp.batch_size = std::size_t{8} << batch_pick(rng);
  hp.hidden_units = std::size_t{1} << hidden_pow(rng);
  hp.dropout_rate = dropout(rng);
  hp.weight_decay = std::pow(10.0, exponent(rng));
  hp.grad_clip_norm = clip(rng);
  return hp;
}

Mlp::Mlp(std::size_t input_width, std::size_t hidden_units)
    : w1(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hidden_units), static_cast<Eigen::Index>(input_width))),
      b1(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden_units))),
      w2(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden_units))) {}

void Mlp::initialize(Rng& rng) {
  const double fan_in = static_cast<double>(w1.cols());
  const double hidden = static_cast<double>(w1.rows());
  std::uniform_real_distribution<double> u1(-std::sqrt(6.0 / (fan_in + hidden)), std::sqrt(6.0 / (fan_in + hidden)));
  std::uniform_real_distribution<double> u2(-std::sqrt(6.0 / (hidden + 1.0)), std::sqrt(6.0 / (hidden + 1.0)));
  for (Eigen::Index j = 0; j < w1.cols(); ++j)
    for (Eigen::Index i = 0; i < w1.rows(); ++i) w1(i, j) = u1(rng);
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2(i) = u2(rng);
  b1.setZero();
  b2 = 0;
}

double Mlp::forward(std::span<const double> x, Mode mode, double dropout_rate, Rng* rng) const {
  if (x.size() != input_width())
    throw std::invalid_argument("network expects " + std::to_string(input_width()) + " inputs, got " +
                                std::to_string(x.size()));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd h = (w1 * xv + b1).cwiseMax(0.0);
  if (mode == Mode::train && dropout_rate > 0) {
    if (!rng) throw std::invalid_argument("dropout needs a random stream");
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = keep(*rng) ? h(i) / (1.0 - dropout_rate) : 0.0;
  }
  return w2.dot(h) + b2;
}

Eigen::VectorXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_width())
    throw std::invalid_argument("network expects " + std::to_string(input_width()) + " inputs, got " +
                                std::to_string(inputs.cols()));
  const Eigen::MatrixXd h = ((inputs * w1.transpose()).rowwise() + b1.transpose()).cwiseMax(0.0);
  return (h * w2).array() + b2;
}

std::size_t Mlp::parameter_count() const noexcept {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + 1);
}

double Gradients::norm() const {
  return std::sqrt(w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2 * b2);
}

double loss_and_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                          Gradients* grads, double dropout_rate, Rng* rng) {
  const Eigen::Index batch = inputs.rows();
  if (batch == 0 || targets.size() != batch) throw std::invalid_argument("batch inputs and targets disagree");
  if (static_cast<std::size_t>(inputs.cols()) != net.input_width())
    throw std::invalid_argument("batch width does not match the network");

  const Eigen::MatrixXd pre = (inputs * net.w1.transpose()).rowwise() + net.b1.transpose();
  Eigen::MatrixXd mask = (pre.array() > 0.0).cast<double>();
  if (dropout_rate > 0) {
    if (!rng) throw std::invalid_argument("dropout needs a random stream");
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    const double scale = 1.0 / (1.0 - dropout_rate);
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) *= keep(*rng) ? scale : 0.0;
  }
  // mask carries both the ReLU gate and the inverted-dropout scale
  const Eigen::MatrixXd act = pre.cwiseProduct(mask);
  const Eigen::VectorXd out = (act * net.w2).array() + net.b2;
  const Eigen::VectorXd err = out - targets;
  const double loss = err.squaredNorm() / static_cast<double>(batch);
  if (grads) {
    const Eigen::VectorXd dout = err * (2.0 / static_cast<double>(batch));
    grads->w2 = act.transpose() * dout;
    grads->b2 = dout.sum();
    const Eigen::MatrixXd dpre = (dout * net.w2.transpose()).cwiseProduct(mask);
    grads->w1 = dpre.transpose() * inputs;
    grads->b1 = dpre.colwise().sum().transpose();
  }
  return loss;
}

double clip_gradients(Gradients& g, double max_norm) {
  const double n = g.norm();
  if (n > max_norm && n > 0) {
    const double s = max_norm / n;
    g.w1 *= s;
    g.b1 *= s;
    g.w2 *= s;
    g.b2 *= s;
  }
  return n;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(static_cast<Eigen::Index>(rows[k]));
    out.targets(static_cast<Eigen::Index>(k)) = targets(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

Dataset make_dataset(std::span<const Chromosome> chromosomes, std::span<const double> fitness) {
  if (chromosomes.size() != fitness.size()) throw std::invalid_argument("chromosome and fitness counts differ");
  Dataset d;
  const std::size_t width = chromosomes.empty() ? 0 : chromosomes.front().size();
  d.inputs.resize(static_cast<Eigen::Index>(chromosomes.size()), static_cast<Eigen::Index>(width));
  d.targets.resize(static_cast<Eigen::Index>(chromosomes.size()));
  for (std::size_t r = 0; r < chromosomes.size(); ++r) {
    if (chromosomes[r].size() != width) throw std::invalid_argument("chromosomes have different lengths");
    for (std::size_t c = 0; c < width; ++c)
      d.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = chromosomes[r].test(c) ? 1.0 : 0.0;
    d.targets(static_cast<Eigen::Index>(r)) = fitness[r];
  }
  return d;
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
  return out.str();
}

Surrogate::Surrogate(Variant variant, Mlp net, Hyperparams hp, double target_mean, double target_scale)
    : variant_(variant), net_(std::move(net)), hp_(hp), mean_(target_mean), scale_(target_scale) {}

std::size_t Surrogate::chromosome_width() const noexcept {
  return variant_ == Variant::pairwise ? net_.input_width() / 2 : net_.input_width();
}

Prediction Surrogate::predict_feedforward(const Chromosome& c) const {
  if (variant_ != Variant::feedforward) throw std::logic_error("predict_feedforward on a pairwise surrogate");
  if (c.size() != chromosome_width())
    throw std::invalid_argument("chromosome width " + std::to_string(c.size()) + " does not match the surrogate (" +
                                std::to_string(chromosome_width()) + ")");
  std::vector<double> x;
  c.append_to(x);
  return {mean_ + scale_ * net_.forward(x), std::nullopt};
}

Prediction Surrogate::predict_pairwise(const Chromosome& u, std::span<const Reference> references, std::size_t eta,
                                       Rng& rng) const {
  if (variant_ != Variant::pairwise) throw std::logic_error("predict_pairwise on a feedforward surrogate");
  if (references.size() < 2 || eta < 2)
    throw std::invalid_argument("pairwise prediction needs at least two references");
  if (u.size() != chromosome_width())
    throw std::invalid_argument("chromosome width " + std::to_string(u.size()) + " does not match the surrogate (" +
                                std::to_string(chromosome_width()) + ")");
  const std::size_t k = std::min(eta, references.size());
  std::vector<std::size_t> picks(references.size());
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, picks.size() - 1);
    std::swap(picks[i], picks[pick(rng)]);
  }
  picks.resize(k);
  std::sort(picks.begin(), picks.end());

  std::vector<double> estimates;
  estimates.reserve(k);
  std::vector<double> x;
  for (auto idx : picks) {
    const auto& ref = references[idx];
    if (ref.chromosome.size() != u.size()) throw std::invalid_argument("reference chromosome width mismatch");
    x.clear();
    ref.chromosome.append_to(x);
    u.append_to(x);
    estimates.push_back(ref.fitness + scale_ * net_.forward(x));
  }
  double mean = 0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(k);
  double ss = 0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / static_cast<double>(k - 1))};
}

std::string Surrogate::to_json() const {
  using nlohmann::json;
  const auto flat = [](const auto& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
  };
  json doc = {
      {"variant", to_string(variant_)},
      {"layers",
       {{{"shape", {net_.w1.rows(), net_.w1.cols()}}, {"weights", flat(net_.w1)}, {"bias", flat(net_.b1)}},
        {{"shape", {1, net_.w2.size()}}, {"weights", flat(net_.w2)}, {"bias", {net_.b2}}}}},
      {"target_mean", mean_},
      {"target_scale", scale_},
      {"hyperparams",
       {{"learning_rate", hp_.learning_rate},
        {"batch_size", hp_.batch_size},
        {"hidden_units", hp_.hidden_units},
        {"dropout_rate", hp_.dropout_rate},
        {"weight_decay", hp_.weight_decay},
        {"grad_clip_norm", hp_.grad_clip_norm}}},
  };
  return doc.dump();
}

Surrogate Surrogate::from_json(const std::string& text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    const auto& l1 = doc.at("layers").at(0);
    const auto& l2 = doc.at("layers").at(1);
    const auto rows = l1.at("shape").at(0).get<std::size_t>();
    const auto cols = l1.at("shape").at(1).get<std::size_t>();
    Mlp net(cols, rows);
    const auto w1 = l1.at("weights").get<std::vector<double>>();
    const auto b1 = l1.at("bias").get<std::vector<double>>();
    const auto w2 = l2.at("weights").get<std::vector<double>>();
    if (w1.size() != rows * cols || b1.size() != rows || w2.size() != rows)
      throw std::invalid_argument("layer sizes do not match their shapes");
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j)
        net.w1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w1[i * cols + j];
      net.b1(static_cast<Eigen::Index>(i)) = b1[i];
      net.w2(static_cast<Eigen::Index>(i)) = w2[i];
    }
    net.b2 = l2.at("bias").at(0).get<double>();
    const auto& h = doc.at("hyperparams");
    Hyperparams hp{h.at("learning_rate").get<double>(), h.at("batch_size").get<std::size_t>(),
                   h.at("hidden_units").get<std::size_t>(), h.at("dropout_rate").get<double>(),
                   h.at("weight_decay").get<double>(), h.at("grad_clip_norm").get<double>()};
    return Surrogate(parse_variant(doc.at("variant").get<std::string>()), std::move(net), hp,
                     doc.at("target_mean").get<double>(), doc.at("target_scale").get<double>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed surrogate snapshot: ") + e.what());
  }
}

namespace {

struct Adam {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

  Gradients m, v;
  std::size_t t = 0;

  explicit Adam(const Mlp& net) {
    m.w1 = v.w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
    m.b1 = v.b1 = Eigen::VectorXd::Zero(net.b1.size());
    m.w2 = v.w2 = Eigen::VectorXd::Zero(net.w2.size());
  }

  void step(Mlp& net, const Gradients& g, double lr, double weight_decay) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const auto update = [&](auto& param, auto& mm, auto& vv, const auto& grad, bool decay) {
      mm = beta1 * mm + (1.0 - beta1) * grad;
      vv = beta2 * vv + (1.0 - beta2) * grad.cwiseProduct(grad);
      if (decay) param *= (1.0 - lr * weight_decay);
      param.array() -= lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + eps);
    };
    update(net.w1, m.w1, v.w1, g.w1, true);
    update(net.b1, m.b1, v.b1, g.b1, false);
    update(net.w2, m.w2, v.w2, g.w2, true);
    m.b2 = beta1 * m.b2 + (1.0 - beta1) * g.b2;
    v.b2 = beta2 * v.b2 + (1.0 - beta2) * g.b2 * g.b2;
    net.b2 -= lr * (m.b2 / c1) / (std::sqrt(v.b2 / c2) + eps);
  }
};

// Fills `x` row `row` with concat(a, b).
void put_pair(Eigen::MatrixXd& x, Eigen::Index row, const Eigen::MatrixXd& src_a, Eigen::Index a,
              const Eigen::MatrixXd& src_b, Eigen::Index b) {
  const Eigen::Index d = src_a.cols();
  x.row(row).head(d) = src_a.row(a);
  x.row(row).tail(d) = src_b.row(b);
}

double mse(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() == 0) return 0;
  return (net.forward_batch(x) - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t count, Rng& rng) {
  if (n == 0) throw std::invalid_argument("cannot sample pairs from an empty set");
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs(count);
  for (auto& [i, u] : pairs) {
    i = any(rng);
    u = any(rng);
  }
  return pairs;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double validation_fraction,
                                                                        Rng& rng) {
  if (!(validation_fraction > 0 && validation_fraction < 1))
    throw std::invalid_argument("validation fraction must be in (0, 1)");
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(n)));
  if (n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  else n_val = 0;
  std::vector<std::size_t> val(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  return {tr, val};
}

FitResult fit(Variant variant, const Dataset& train_set, const Dataset& validation, const Hyperparams& hp,
              const TrainConfig& cfg) {
  hp.validate();
  const std::size_t n = train_set.size();
  if (n == 0) throw std::invalid_argument("cannot train on an empty dataset");
  if (cfg.max_epochs == 0) throw std::invalid_argument("max epochs must be positive");
  const Eigen::Index d = train_set.inputs.cols();
  if (validation.size() > 0 && validation.inputs.cols() != d)
    throw std::invalid_argument("training and validation widths differ");

  const double mean = train_set.targets.mean();
  double sd = std::sqrt((train_set.targets.array() - mean).square().sum() / static_cast<double>(n));
  if (!(sd > 1e-12)) sd = 1.0;
  const double offset = variant == Variant::feedforward ? mean : 0.0;

  Rng rng(derive_seed({cfg.seed, tag(StreamTag::training)}));
  const Eigen::Index width = variant == Variant::feedforward ? d : 2 * d;
  Mlp net(static_cast<std::size_t>(width), hp.hidden_units);
  net.initialize(rng);

  const Eigen::VectorXd y_train = (train_set.targets.array() - offset) / sd;
  const Dataset& stop_set = validation.size() > 0 ? validation : train_set;
  Eigen::MatrixXd x_val;
  Eigen::VectorXd y_val;
  if (variant == Variant::feedforward) {
    x_val = stop_set.inputs;
    y_val = (stop_set.targets.array() - offset) / sd;
  } else {
    const std::size_t per = std::max<std::size_t>(1, cfg.pairs_per_point);
    const auto rows = static_cast<Eigen::Index>(stop_set.size() * per);
    x_val.resize(rows, 2 * d);
    y_val.resize(rows);
    std::uniform_int_distribution<Eigen::Index> ref(0, static_cast<Eigen::Index>(n) - 1);
    Eigen::Index r = 0;
    for (Eigen::Index u = 0; u < static_cast<Eigen::Index>(stop_set.size()); ++u)
      for (std::size_t k = 0; k < per; ++k, ++r) {
        const Eigen::Index i = ref(rng);
        put_pair(x_val, r, train_set.inputs, i, stop_set.inputs, u);
        y_val(r) = (stop_set.targets(u) - train_set.targets(i)) / sd;
      }
  }

  Adam adam(net);
  Gradients grads;
  Mlp best = net;
  FitResult result;
  result.report.best_val_loss = mse(net, x_val, y_val);
  std::size_t since_best = 0;

  const std::size_t samples = variant == Variant::feedforward ? n : n * std::max<std::size_t>(1, cfg.pairs_per_point);
  Eigen::MatrixXd x_epoch(static_cast<Eigen::Index>(samples), width);
  Eigen::VectorXd y_epoch(static_cast<Eigen::Index>(samples));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (variant == Variant::feedforward) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < n; ++k) {
        x_epoch.row(static_cast<Eigen::Index>(k)) = train_set.inputs.row(static_cast<Eigen::Index>(order[k]));
        y_epoch(static_cast<Eigen::Index>(k)) = y_train(static_cast<Eigen::Index>(order[k]));
      }
    } else {
      const auto pairs = sample_pairs(n, samples, rng);
      for (std::size_t k = 0; k < samples; ++k) {
        const auto i = static_cast<Eigen::Index>(pairs[k].first);
        const auto u = static_cast<Eigen::Index>(pairs[k].second);
        put_pair(x_epoch, static_cast<Eigen::Index>(k), train_set.inputs, i, train_set.inputs, u);
        y_epoch(static_cast<Eigen::Index>(k)) = (train_set.targets(u) - train_set.targets(i)) / sd;
      }
    }

    double loss_sum = 0;
    for (std::size_t start = 0; start < samples; start += hp.batch_size) {
      const auto len = static_cast<Eigen::Index>(std::min(hp.batch_size, samples - start));
      xb = x_epoch.middleRows(static_cast<Eigen::Index>(start), len);
      yb = y_epoch.segment(static_cast<Eigen::Index>(start), len);
      const double loss = loss_and_gradients(net, xb, yb, &grads, hp.dropout_rate, &rng);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(len);
      clip_gradients(grads, hp.grad_clip_norm);
      adam.step(net, grads, hp.learning_rate, hp.weight_decay);
    }
    const double val_loss = mse(net, x_val, y_val);
    if (!std::isfinite(val_loss)) throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.report.epochs.push_back({epoch, loss_sum / static_cast<double>(samples), val_loss});
    if (val_loss < result.report.best_val_loss) {
      result.report.best_val_loss = val_loss;
      result.report.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.model = Surrogate(variant, std::move(best), hp, offset, sd);
  return result;
}

FitResult train(Variant variant, const Dataset& data, const Hyperparams& hp, const TrainConfig& cfg) {
  if (data.size() < 5) throw std::invalid_argument("training needs at least 5 samples");
  Rng rng(derive_seed({cfg.seed, tag(StreamTag::learning_set)}));
  const auto [tr, val] = split_rows(data.size(), cfg.validation_fraction, rng);
  return fit(variant, data.subset(tr), data.subset(val), hp, cfg);
}

double prob_better_than_best(const Prediction& pred, double best, Sense sense) {
  if (!pred.std) throw std::invalid_argument("probability of improvement needs a standard deviation");
  const double sd = *pred.std;
  const double margin = sense == Sense::minimize ? best - pred.mean : pred.mean - best;
  if (sd <= 0) return margin > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-margin / (sd * std::sqrt(2.0)));
}

TuneResult tune(const Dataset& data, Variant variant, std::size_t trials, std::uint64_t seed,
                const TrainConfig& base, const HyperparamSampler& sampler) {
  if (data.size() < 10) throw std::invalid_argument("tuning needs at least 10 samples");
  if (trials == 0) throw std::invalid_argument("tuning needs at least one trial");
  Rng split_rng(derive_seed({seed, tag(StreamTag::tuning), 0}));
  const auto [tr, val] = split_rows(data.size(), base.validation_fraction, split_rng);
  const Dataset train_set = data.subset(tr);
  const Dataset val_set = data.subset(val);

  TuneResult result;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng hp_rng(derive_seed({seed, tag(StreamTag::tuning), t + 1}));
    const Hyperparams hp = sampler(hp_rng);
    TrainConfig cfg = base;
    cfg.seed = derive_seed({seed, tag(StreamTag::training), t});
    double loss;
    try {
      loss = fit(variant, train_set, val_set, hp, cfg).report.best_val_loss;
    } catch (const TrainingError&) {
      loss = std::numeric_limits<double>::infinity();
    }
    result.trials.push_back({hp, loss});
    if (t == 0 || loss < result.trials[result.best_trial].val_loss) result.best_trial = t;
  }
  result.best = result.trials[result.best_trial].hp;
  return result;
}

}  // namespace topogen::nn
