#include "olu/olbfgs.hpp"

#include "olu/error.hpp"
#include "olu/seeding.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

namespace olu {

namespace {

std::string hex(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::hex);
  return std::string(buf.data(), res.ptr);
}

double parse_hex(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw Error(Errc::ParseError, "bad hex float '" + tok + "'");
  return v;
}

void write_vector(std::ostream& os, std::string_view tag, const Vector& v) {
  os << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << hex(v[i]);
  os << '\n';
}

Vector read_vector(std::istream& is, std::string_view tag, Eigen::Index d) {
  std::string t;
  is >> t;
  if (t != tag) throw Error(Errc::ParseError, "expected '" + std::string(tag) + "', got '" + t + "'");
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::string tok;
    is >> tok;
    v[i] = parse_hex(tok);
  }
  return v;
}

void expect(std::istream& is, std::string_view word) {
  std::string t;
  is >> t;
  if (t != word)
    throw Error(Errc::ParseError, "expected '" + std::string(word) + "', got '" + t + "'");
}

}  // namespace

CurvaturePair CurvaturePair::make(Vector s, Vector y, std::vector<SampleIndex> sources,
                                  std::uint64_t created_at) {
  const double sy = s.dot(y);
  return CurvaturePair{std::move(s), std::move(y), 1.0 / sy, std::move(sources), created_at};
}

std::string_view to_string(GammaMode m) noexcept {
  return m == GammaMode::NewestPair ? "newest_pair" : "fixed";
}

GammaMode parse_gamma_mode(std::string_view s) {
  if (s == "newest_pair") return GammaMode::NewestPair;
  if (s == "fixed") return GammaMode::Fixed;
  throw Error(Errc::InvalidConfig, "unknown gamma mode '" + std::string(s) + "'");
}

double MemoryState::gamma() const {
  if (scaling_.mode == GammaMode::Fixed || pairs_.empty()) return scaling_.gamma0;
  const CurvaturePair& p = pairs_.newest();
  return p.s.dot(p.y) / p.y.squaredNorm();
}

void validate(const StepConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw Error(Errc::InvalidConfig, "eta must be > 0");
  if (!(cfg.curvature_eps >= 0.0)) throw Error(Errc::InvalidConfig, "curvature_eps must be >= 0");
  if (!(cfg.gamma0 > 0.0)) throw Error(Errc::InvalidConfig, "gamma0 must be > 0");
  if (!(cfg.ridge >= 0.0)) throw Error(Errc::InvalidConfig, "ridge must be >= 0");
}

OptimizerState initial_state(Eigen::Index dimension, std::size_t tau, const StepConfig& cfg) {
  if (tau < 1) throw Error(Errc::InvalidConfig, "memory window tau must be >= 1");
  return OptimizerState{Vector::Zero(dimension), MemoryState(tau, {cfg.gamma_mode, cfg.gamma0}), 0};
}

Vector two_loop(const MemoryState& memory, const Vector& q) {
  const std::size_t m = memory.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (memory[i].s.size() != q.size() || memory[i].y.size() != q.size())
      throw Error(Errc::DimensionMismatch, "curvature pair and probe dimensions differ");
  }
  Vector r = q;
  std::vector<double> alpha(m);
  for (std::size_t k = m; k-- > 0;) {
    const CurvaturePair& p = memory[k];
    alpha[k] = p.rho * p.s.dot(r);
    r.noalias() -= alpha[k] * p.y;
  }
  r *= memory.gamma();
  for (std::size_t k = 0; k < m; ++k) {
    const CurvaturePair& p = memory[k];
    const double beta = p.rho * p.y.dot(r);
    r.noalias() += (alpha[k] - beta) * p.s;
  }
  return r;
}

Vector update_direction(const OptimizerState& state, const SamplePayload& payload, double ridge) {
  return -two_loop(state.memory, loss_and_grad(payload, state.w, ridge).grad);
}

StepInfo step_in_place(OptimizerState& state, const Event& event, const StepConfig& cfg) {
  if (!event.is_insert() || !event.payload)
    throw Error(Errc::NonInsertEvent, "step() only consumes insert events (index " +
                                          std::to_string(event.index) + ")");
  const LossGrad before = loss_and_grad(*event.payload, state.w, cfg.ridge);
  Vector w_next = state.w - cfg.eta * two_loop(state.memory, before.grad);
  const LossGrad after = loss_and_grad(*event.payload, w_next, cfg.ridge);

  Vector s = w_next - state.w;
  Vector y = after.grad - before.grad;
  StepInfo info{false, before.loss};
  if (s.dot(y) > cfg.curvature_eps) {
    state.memory.push(CurvaturePair::make(std::move(s), std::move(y), {event.index}, state.step + 1));
    info.pair_accepted = true;
  }
  state.w = std::move(w_next);
  ++state.step;
  return info;
}

OptimizerState step(const OptimizerState& state, const Event& event, const StepConfig& cfg) {
  OptimizerState next = state;
  step_in_place(next, event, cfg);
  return next;
}

OptimizerState replay(OptimizerState theta0, std::span<const Event> history,
                      const StepConfig& cfg) {
  for (const Event& e : history) {
    if (e.is_insert()) step_in_place(theta0, e, cfg);
  }
  return theta0;
}

std::size_t direct_memory_mass(const MemoryState& memory, const DeletionSet& deletions) {
  std::size_t mass = 0;
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto& src = memory[i].sources;
    if (std::any_of(src.begin(), src.end(), [&](SampleIndex s) { return deletions.contains(s); }))
      ++mass;
  }
  return mass;
}

std::uint64_t config_hash(const StepConfig& cfg) {
  Fnv1a h;
  h.update_value(cfg.eta);
  h.update_value(cfg.curvature_eps);
  h.update_value(static_cast<int>(cfg.gamma_mode));
  h.update_value(cfg.gamma0);
  h.update_value(cfg.ridge);
  return h.digest();
}

std::string serialize(const OptimizerState& state, const StepConfig& cfg) {
  std::ostringstream os;
  os << "olu-state v1\n";
  os << "config " << std::hex << config_hash(cfg) << std::dec << '\n';
  os << "dim " << state.w.size() << " tau " << state.memory.tau() << " step " << state.step << '\n';
  os << "scaling " << to_string(state.memory.scaling().mode) << ' '
     << hex(state.memory.scaling().gamma0) << '\n';
  write_vector(os, "w", state.w);
  os << "pairs " << state.memory.size() << '\n';
  for (std::size_t i = 0; i < state.memory.size(); ++i) {
    const CurvaturePair& p = state.memory[i];
    os << "pair " << p.created_at << ' ' << p.sources.size();
    for (auto s : p.sources) os << ' ' << s;
    os << '\n';
    write_vector(os, "s", p.s);
    write_vector(os, "y", p.y);
  }
  return os.str();
}

OptimizerState deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  expect(is, "olu-state");
  expect(is, "v1");
  expect(is, "config");
  std::string hash;
  is >> hash;
  OptimizerState st;
  Eigen::Index d = 0;
  std::size_t tau = 0;
  expect(is, "dim");
  is >> d;
  expect(is, "tau");
  is >> tau;
  expect(is, "step");
  is >> st.step;
  expect(is, "scaling");
  std::string mode, g0;
  is >> mode >> g0;
  if (!is || d < 1 || tau < 1) throw Error(Errc::ParseError, "malformed state header");
  st.memory = MemoryState(tau, {parse_gamma_mode(mode), parse_hex(g0)});
  st.w = read_vector(is, "w", d);
  expect(is, "pairs");
  std::size_t n = 0;
  is >> n;
  for (std::size_t i = 0; i < n; ++i) {
    expect(is, "pair");
    std::uint64_t created = 0;
    std::size_t ns = 0;
    is >> created >> ns;
    std::vector<SampleIndex> src(ns);
    for (auto& s : src) is >> s;
    Vector s = read_vector(is, "s", d);
    Vector y = read_vector(is, "y", d);
    st.memory.push(CurvaturePair::make(std::move(s), std::move(y), std::move(src), created));
  }
  if (!is) throw Error(Errc::ParseError, "truncated state snapshot");
  return st;
}

}  // namespace olu
