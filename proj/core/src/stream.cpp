#include "olu/stream.hpp"

#include "olu/error.hpp"
#include "olu/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace olu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
  if (m < 0.0) return -m + std::log1p(std::exp(m));
  return std::log1p(std::exp(-m));
}

double drift_weight(const StreamConfig& cfg, std::uint64_t t) {
  return 0.5 * cfg.curvature_drift *
         (1.0 + std::sin(kTwoPi * static_cast<double>(t) / cfg.curvature_period));
}

void check_dimension(const SamplePayload& p, const Vector& w) {
  if (payload_dimension(p) != w.size())
    throw Error(Errc::DimensionMismatch, "payload dimension " +
                                             std::to_string(payload_dimension(p)) +
                                             " vs parameter dimension " + std::to_string(w.size()));
}

EventStream empty_stream(const StreamConfig& cfg, std::uint64_t seed) {
  EventStream s;
  s.dimension = cfg.dimension;
  s.regime = cfg.regime;
  s.config = cfg;
  s.seed = seed;
  s.events.reserve(cfg.length);
  return s;
}

// Unit directions for the drift terms; the second is zero when d == 1.
std::pair<Vector, Vector> drift_directions(Eigen::Index d, Rng& rng) {
  const Matrix q = random_orthonormal(d, std::min<Eigen::Index>(2, d), rng);
  Vector u1 = q.col(0);
  Vector u2 = d >= 2 ? Vector(q.col(1)) : Vector::Zero(d);
  return {u1, u2};
}

}  // namespace

std::string_view to_string(Regime r) noexcept {
  return r == Regime::Quadratic ? "quadratic" : "logistic";
}

std::string_view to_string(DeletionMode m) noexcept {
  switch (m) {
    case DeletionMode::Recent: return "recent";
    case DeletionMode::Old: return "old";
    case DeletionMode::Random: return "random";
    case DeletionMode::HighGradient: return "high_gradient";
  }
  return "recent";
}

Regime parse_regime(std::string_view s) {
  if (s == "quadratic") return Regime::Quadratic;
  if (s == "logistic") return Regime::Logistic;
  throw Error(Errc::InvalidConfig, "unknown regime '" + std::string(s) + "'");
}

DeletionMode parse_deletion_mode(std::string_view s) {
  if (s == "recent") return DeletionMode::Recent;
  if (s == "old") return DeletionMode::Old;
  if (s == "random") return DeletionMode::Random;
  if (s == "high_gradient" || s == "highgradient") return DeletionMode::HighGradient;
  throw Error(Errc::InvalidConfig, "unknown deletion mode '" + std::string(s) + "'");
}

Eigen::Index payload_dimension(const SamplePayload& p) {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSample>) return s.minimizer.size();
        else return s.features.size();
      },
      p);
}

Event Event::insert(std::uint64_t time, SampleIndex index, SamplePayload payload) {
  return Event{EventOp::Insert, index, std::move(payload), time};
}

Event Event::remove(std::uint64_t time, SampleIndex index) {
  return Event{EventOp::Delete, index, std::nullopt, time};
}

void validate_generator(const StreamConfig& cfg) {
  if (!(cfg.kappa >= 1.0)) throw Error(Errc::InvalidConfig, "kappa must be >= 1");
  if (!(cfg.mu > 0.0)) throw Error(Errc::InvalidConfig, "mu must be > 0");
  if (cfg.length < 1) throw Error(Errc::InvalidConfig, "stream length must be >= 1");
  if (cfg.dimension < 1) throw Error(Errc::InvalidConfig, "dimension must be >= 1");
  if (!(cfg.drift_amplitude >= 0.0) || !(cfg.drift_noise >= 0.0))
    throw Error(Errc::InvalidConfig, "drift amplitude and noise must be >= 0");
  if (!(cfg.drift_period > 0.0) || !(cfg.curvature_period > 0.0) || !(cfg.label_period > 0.0))
    throw Error(Errc::InvalidConfig, "drift periods must be > 0");
  if (!(cfg.curvature_drift >= 0.0 && cfg.curvature_drift <= 1.0))
    throw Error(Errc::InvalidConfig, "curvature drift must lie in [0, 1]");
  if (cfg.regime == Regime::Logistic && !(cfg.ridge > 0.0))
    throw Error(Errc::InvalidConfig, "ridge must be > 0 in the logistic regime");
}

void validate_deletion_window(const StreamConfig& cfg) {
  if (cfg.deletion_time < 1 || cfg.deletion_time >= cfg.length)
    throw Error(Errc::InvalidConfig, "deletion time must satisfy 1 <= t_del < T");
  if (cfg.deletion_time + cfg.horizon > cfg.length)
    throw Error(Errc::InvalidConfig, "t_del + horizon exceeds the stream length");
  if (cfg.deletion_size > cfg.deletion_time)
    throw Error(Errc::InvalidConfig, "deletion size exceeds the inserts before t_del");
}

std::span<const Event> EventStream::slice(std::uint64_t first, std::uint64_t last) const {
  first = std::max<std::uint64_t>(first, 1);
  last = std::min<std::uint64_t>(last, events.size());
  if (first > last) return {};
  return std::span<const Event>(events).subspan(first - 1, last - first + 1);
}

EventStream gen_quadratic_stream(const StreamConfig& cfg_in, std::uint64_t seed) {
  StreamConfig cfg = cfg_in;
  cfg.regime = Regime::Quadratic;
  validate_generator(cfg);
  const Eigen::Index d = cfg.dimension;
  const double lo = cfg.mu;
  const double hi = cfg.kappa * cfg.mu;

  Rng rng(seed);
  auto h0 = std::make_shared<const Matrix>(spd_with_spectrum(d, lo, hi, rng));
  const Matrix h1 = spd_with_spectrum(d, lo, hi, rng);
  const auto [u1, u2] = drift_directions(d, rng);
  const Vector a0 = gaussian_vector(d, rng);

  EventStream out = empty_stream(cfg, seed);
  for (std::uint64_t t = 1; t <= cfg.length; ++t) {
    const double phase = kTwoPi * static_cast<double>(t) / cfg.drift_period;
    Vector a = a0 + cfg.drift_amplitude * std::sin(phase) * u1 +
               cfg.drift_amplitude * std::cos(phase) * u2;
    const Vector xi = gaussian_vector(d, rng);
    a += cfg.drift_noise * xi;

    std::shared_ptr<const Matrix> h = h0;
    if (cfg.curvature_drift > 0.0) {
      const double alpha = drift_weight(cfg, t);
      h = std::make_shared<const Matrix>(
          clamp_spectrum(symmetrize((1.0 - alpha) * *h0 + alpha * h1), lo, hi));
    }
    out.events.push_back(Event::insert(t, t, QuadraticSample{std::move(h), std::move(a)}));
  }
  return out;
}

EventStream gen_logistic_stream(const StreamConfig& cfg_in, std::uint64_t seed) {
  StreamConfig cfg = cfg_in;
  cfg.regime = Regime::Logistic;
  validate_generator(cfg);
  const Eigen::Index d = cfg.dimension;
  const double lo = cfg.mu;
  const double hi = cfg.kappa * cfg.mu;

  Rng rng(seed);
  const Matrix sigma0 = spd_with_spectrum(d, lo, hi, rng);
  const Matrix sigma1 = spd_with_spectrum(d, lo, hi, rng);
  const Vector v = random_orthonormal(d, 1, rng).col(0);
  const Vector beta0 = cfg.beta0_scale * random_orthonormal(d, 1, rng).col(0);
  const Matrix chol0 = sigma0.llt().matrixL();

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EventStream out = empty_stream(cfg, seed);
  for (std::uint64_t t = 1; t <= cfg.length; ++t) {
    Matrix chol_t;
    const Matrix* chol = &chol0;
    if (cfg.curvature_drift > 0.0) {
      const double alpha = drift_weight(cfg, t);
      chol_t = Matrix(symmetrize((1.0 - alpha) * sigma0 + alpha * sigma1).llt().matrixL());
      chol = &chol_t;
    }
    const Vector z = gaussian_vector(d, rng);
    Vector x = *chol * z;
    const Vector beta =
        beta0 + cfg.label_drift * std::sin(kTwoPi * static_cast<double>(t) / cfg.label_period) * v;
    const double label = unif(rng) < sigmoid(x.dot(beta)) ? 1.0 : -1.0;
    out.events.push_back(Event::insert(t, t, LogisticSample{std::move(x), label}));
  }
  return out;
}

EventStream generate_stream(const StreamConfig& cfg, std::uint64_t seed) {
  return cfg.regime == Regime::Quadratic ? gen_quadratic_stream(cfg, seed)
                                         : gen_logistic_stream(cfg, seed);
}

LossGrad loss_and_grad(const SamplePayload& payload, const Vector& w, double ridge) {
  check_dimension(payload, w);
  if (const auto* q = std::get_if<QuadraticSample>(&payload)) {
    const Vector r = w - q->minimizer;
    Vector g = *q->hessian * r;
    return {0.5 * r.dot(g), std::move(g)};
  }
  const auto& s = std::get<LogisticSample>(payload);
  const double margin = s.label * s.features.dot(w);
  const double loss = softplus_neg(margin) + 0.5 * ridge * w.squaredNorm();
  Vector g = (-s.label * sigmoid(-margin)) * s.features + ridge * w;
  return {loss, std::move(g)};
}

Matrix loss_hessian(const SamplePayload& payload, const Vector& w, double ridge) {
  check_dimension(payload, w);
  if (const auto* q = std::get_if<QuadraticSample>(&payload)) return *q->hessian;
  const auto& s = std::get<LogisticSample>(payload);
  const double margin = s.label * s.features.dot(w);
  const double p = sigmoid(margin);
  Matrix h = (p * (1.0 - p)) * (s.features * s.features.transpose());
  h.diagonal().array() += ridge;
  return h;
}

bool DeletionSet::contains(SampleIndex i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

DeletionSet make_deletion_set(std::vector<SampleIndex> indices, std::uint64_t requested_at,
                              DeletionMode mode) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return DeletionSet{std::move(indices), requested_at, mode};
}

DeletionSet select_deletion_set(const EventStream& stream, std::uint64_t t_del,
                                DeletionMode mode, std::size_t size,
                                const std::optional<Vector>& grad_state) {
  std::vector<const Event*> candidates;
  for (const auto& e : stream.events) {
    if (e.time > t_del) break;
    if (e.is_insert()) candidates.push_back(&e);
  }
  if (size > candidates.size())
    throw Error(Errc::InsufficientHistory, "requested " + std::to_string(size) +
                                               " deletions but only " +
                                               std::to_string(candidates.size()) +
                                               " inserts precede t_del");
  if (mode == DeletionMode::HighGradient && !grad_state)
    throw Error(Errc::MissingGradState, "high-gradient deletion needs the parameter vector at t_del");

  std::vector<SampleIndex> chosen;
  chosen.reserve(size);
  switch (mode) {
    case DeletionMode::Recent:
      for (std::size_t i = 0; i < size; ++i)
        chosen.push_back(candidates[candidates.size() - 1 - i]->index);
      break;
    case DeletionMode::Old:
      for (std::size_t i = 0; i < size; ++i) chosen.push_back(candidates[i]->index);
      break;
    case DeletionMode::Random: {
      Rng rng(mix_seed(stream.seed, t_del));
      std::vector<std::size_t> order(candidates.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
        chosen.push_back(candidates[order[i]]->index);
      }
      break;
    }
    case DeletionMode::HighGradient: {
      struct Ranked {
        double norm;
        std::uint64_t time;
        SampleIndex index;
      };
      std::vector<Ranked> ranked;
      ranked.reserve(candidates.size());
      for (const Event* e : candidates) {
        const double n = loss_and_grad(*e->payload, *grad_state, stream.config.ridge).grad.norm();
        ranked.push_back({n, e->time, e->index});
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.norm != b.norm) return a.norm > b.norm;
        return a.time < b.time;
      });
      for (std::size_t i = 0; i < size; ++i) chosen.push_back(ranked[i].index);
      break;
    }
  }
  return make_deletion_set(std::move(chosen), t_del, mode);
}

std::vector<Event> edit_history(std::span<const Event> prefix, const DeletionSet& deletions) {
  std::vector<Event> out;
  out.reserve(prefix.size());
  for (const auto& e : prefix) {
    if (!deletions.contains(e.index)) out.push_back(e);
  }
  return out;
}

}  // namespace olu
