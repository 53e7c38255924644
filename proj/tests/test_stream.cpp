#include "olu/error.hpp"
#include "olu/stream.hpp"
#include "olu/stream_io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

using namespace olu;

namespace {

Vector finite_difference_grad(const SamplePayload& p, const Vector& w, double ridge) {
  const double h = 1e-6;
  Vector g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Vector a = w, b = w;
    a[i] += h;
    b[i] -= h;
    g[i] = (loss_and_grad(p, a, ridge).loss - loss_and_grad(p, b, ridge).loss) / (2 * h);
  }
  return g;
}

bool same_payload(const SamplePayload& a, const SamplePayload& b) {
  if (a.index() != b.index()) return false;
  if (const auto* qa = std::get_if<QuadraticSample>(&a)) {
    const auto& qb = std::get<QuadraticSample>(b);
    return qa->minimizer == qb.minimizer && *qa->hessian == *qb.hessian;
  }
  const auto& la = std::get<LogisticSample>(a);
  const auto& lb = std::get<LogisticSample>(b);
  return la.features == lb.features && la.label == lb.label;
}

}  // namespace

TEST_CASE("quadratic stream at the experiment 1 defaults") {
  StreamConfig c;
  c.length = 700;
  c.kappa = 10.0;
  c.deletion_time = 300;
  c.horizon = 250;
  const EventStream s = gen_quadratic_stream(c, 7);
  REQUIRE(s.events.size() == 700);
  const Matrix* last = nullptr;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    CHECK(e.is_insert());
    CHECK(e.time == i + 1);
    const auto& q = std::get<QuadraticSample>(*e.payload);
    if (q.hessian.get() == last) continue;
    last = q.hessian.get();
    Eigen::SelfAdjointEigenSolver<Matrix> es(*q.hessian);
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= 10.0 + 1e-9);
  }
}

TEST_CASE("time-varying curvature stays inside the spectrum band") {
  StreamConfig c = testing::small_stream_config();
  c.curvature_drift = 1.0;
  c.curvature_period = 30.0;
  const EventStream s = generate_stream(c, 3);
  for (const auto& e : s.events) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*std::get<QuadraticSample>(*e.payload).hessian);
    CHECK(es.eigenvalues().minCoeff() >= c.mu - 1e-9);
    CHECK(es.eigenvalues().maxCoeff() <= c.kappa * c.mu + 1e-9);
  }
}

TEST_CASE("zero drift freezes minimizer and curvature") {
  StreamConfig c = testing::small_stream_config();
  c.drift_amplitude = 0.0;
  c.drift_noise = 0.0;
  c.curvature_drift = 0.0;
  const EventStream s = generate_stream(c, 9);
  const auto& first = std::get<QuadraticSample>(*s.events.front().payload);
  for (const auto& e : s.events) {
    const auto& q = std::get<QuadraticSample>(*e.payload);
    CHECK(q.minimizer == first.minimizer);
    CHECK(*q.hessian == *first.hessian);
  }
}

TEST_CASE("streams are bit-identical for the same seed") {
  StreamConfig c;
  c.dimension = 2;
  c.length = 3;
  c.deletion_time = 1;
  c.horizon = 1;
  c.deletion_size = 1;
  for (Regime r : {Regime::Quadratic, Regime::Logistic}) {
    c.regime = r;
    const EventStream a = generate_stream(c, 1);
    const EventStream b = generate_stream(c, 1);
    REQUIRE(a.events.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same_payload(*a.events[i].payload, *b.events[i].payload));
    const EventStream other = generate_stream(c, 2);
    CHECK_FALSE(same_payload(*a.events[0].payload, *other.events[0].payload));
  }
}

TEST_CASE("logistic stream labels and balance") {
  StreamConfig c;
  c.regime = Regime::Logistic;
  c.length = 5000;
  const EventStream s = generate_stream(c, 4);
  REQUIRE(s.events.size() == 5000);
  for (const auto& e : s.events) {
    const double y = std::get<LogisticSample>(*e.payload).label;
    CHECK((y == 1.0 || y == -1.0));
  }

  c.length = 10000;
  c.beta0_scale = 0.0;
  c.label_drift = 0.0;
  c.deletion_time = 500;
  const EventStream z = generate_stream(c, 8);
  double pos = 0;
  for (const auto& e : z.events) pos += std::get<LogisticSample>(*e.payload).label > 0;
  CHECK(std::abs(pos / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("logistic features follow the declared covariance") {
  StreamConfig c;
  c.regime = Regime::Logistic;
  c.dimension = 2;
  c.kappa = 1.0;  // isotropic, Sigma = I
  c.length = 50000;
  c.deletion_time = 10;
  c.horizon = 10;
  const EventStream s = generate_stream(c, 5);
  Matrix cov = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (const auto& e : s.events) mean += std::get<LogisticSample>(*e.payload).features;
  mean /= 50000.0;
  for (const auto& e : s.events) {
    const Vector x = std::get<LogisticSample>(*e.payload).features - mean;
    cov += x * x.transpose();
  }
  cov /= 49999.0;
  CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("generator validation") {
  StreamConfig c = testing::small_stream_config();
  c.kappa = 0.5;
  CHECK_THROWS_AS(validate_generator(c), Error);
  c = testing::small_stream_config();
  c.deletion_time = c.length;
  CHECK_THROWS_AS(validate_deletion_window(c), Error);
  c = testing::small_stream_config();
  c.horizon = c.length;
  CHECK_THROWS_AS(validate_deletion_window(c), Error);
  c = testing::small_stream_config();
  c.regime = Regime::Logistic;
  c.ridge = 0.0;
  CHECK_THROWS_AS(validate_generator(c), Error);
}

TEST_CASE("loss closed forms") {
  Matrix h(2, 2);
  h << 1, 0, 0, 4;
  const SamplePayload q = QuadraticSample{std::make_shared<const Matrix>(h), Vector::Unit(2, 0)};
  const LossGrad lg = loss_and_grad(q, Vector::Zero(2), 0.0);
  CHECK(lg.loss == doctest::Approx(0.5));
  CHECK(lg.grad[0] == doctest::Approx(-1.0));
  CHECK(lg.grad[1] == doctest::Approx(0.0));
  CHECK((finite_difference_grad(q, Vector::Zero(2), 0.0) - lg.grad).norm() < 1e-6);

  const LossGrad at_min = loss_and_grad(q, Vector::Unit(2, 0), 0.0);
  CHECK(at_min.loss == 0.0);
  CHECK(at_min.grad.norm() == 0.0);

  Vector x(3);
  x << 0.3, -1.2, 2.0;
  const SamplePayload l = LogisticSample{x, -1.0};
  const LossGrad lz = loss_and_grad(l, Vector::Zero(3), 0.0);
  CHECK(lz.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK((lz.grad - (1.0 / 2.0) * x).norm() < 1e-15);  // -y x / 2 with y = -1
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index d = 1 + i % 5;
    Vector w = gaussian_vector(d, rng);
    SamplePayload p;
    if (i % 2 == 0) {
      p = QuadraticSample{std::make_shared<const Matrix>(spd_with_spectrum(d, 1.0, 8.0, rng)),
                          gaussian_vector(d, rng)};
    } else {
      p = LogisticSample{gaussian_vector(d, rng), n(rng) > 0 ? 1.0 : -1.0};
    }
    const Vector g = loss_and_grad(p, w, 0.05).grad;
    const Vector fd = finite_difference_grad(p, w, 0.05);
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));

    const Matrix hess = loss_hessian(p, w, 0.05);
    Matrix fdh(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      Vector a = w, b = w;
      a[j] += 1e-5;
      b[j] -= 1e-5;
      fdh.col(j) = (loss_and_grad(p, a, 0.05).grad - loss_and_grad(p, b, 0.05).grad) / 2e-5;
    }
    CHECK((hess - fdh).norm() <= 1e-5 * std::max(1.0, hess.norm()));
  }
}

TEST_CASE("extreme logistic margins stay finite") {
  Vector x = Vector::Constant(2, 400.0);
  const SamplePayload l = LogisticSample{x, 1.0};
  const LossGrad far = loss_and_grad(l, Vector::Constant(2, -5.0), 0.0);
  CHECK(std::isfinite(far.loss));
  CHECK(far.loss == doctest::Approx(4000.0));
  const LossGrad near = loss_and_grad(l, Vector::Constant(2, 5.0), 0.0);
  CHECK(near.loss >= 0.0);
  CHECK(near.grad.allFinite());
}

TEST_CASE("deletion set selection") {
  StreamConfig c;
  c.length = 400;
  c.deletion_time = 300;
  c.horizon = 50;
  const EventStream s = generate_stream(c, 1);

  const DeletionSet recent = select_deletion_set(s, 300, DeletionMode::Recent, 5);
  CHECK(recent.indices == std::vector<SampleIndex>{296, 297, 298, 299, 300});
  const DeletionSet old = select_deletion_set(s, 300, DeletionMode::Old, 3);
  CHECK(old.indices == std::vector<SampleIndex>{1, 2, 3});

  const DeletionSet r1 = select_deletion_set(s, 300, DeletionMode::Random, 5);
  const DeletionSet r2 = select_deletion_set(s, 300, DeletionMode::Random, 5);
  CHECK(r1.indices == r2.indices);
  CHECK(r1.size() == 5);
  CHECK(std::is_sorted(r1.indices.begin(), r1.indices.end()));
  CHECK(std::adjacent_find(r1.indices.begin(), r1.indices.end()) == r1.indices.end());
  for (auto i : r1.indices) CHECK((i >= 1 && i <= 300));

  CHECK_THROWS_AS(select_deletion_set(s, 300, DeletionMode::HighGradient, 5), Error);
  CHECK_THROWS_AS(select_deletion_set(s, 3, DeletionMode::Recent, 5), Error);
}

TEST_CASE("high-gradient selection matches an exhaustive ranking") {
  Rng rng(2);
  EventStream s;
  s.dimension = 2;
  for (std::uint64_t t = 1; t <= 4; ++t)
    s.events.push_back(testing::quadratic_event(t, spd_with_spectrum(2, 1.0, 3.0, rng),
                                                gaussian_vector(2, rng)));
  const Vector w = gaussian_vector(2, rng);
  // Brute force: every ordered pair of events compared by gradient norm.
  std::vector<std::pair<double, SampleIndex>> ranked;
  for (const auto& e : s.events) ranked.emplace_back(loss_and_grad(*e.payload, w, 0.0).grad.norm(), e.index);
  std::vector<SampleIndex> expect;
  for (std::size_t pick = 0; pick < 2; ++pick) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ranked.size(); ++i)
      if (ranked[i].first > ranked[best].first) best = i;
    expect.push_back(ranked[best].second);
    ranked.erase(ranked.begin() + static_cast<std::ptrdiff_t>(best));
  }
  std::sort(expect.begin(), expect.end());
  CHECK(select_deletion_set(s, 4, DeletionMode::HighGradient, 2, w).indices == expect);
}

TEST_CASE("edit_history filters deleted samples") {
  Rng rng(4);
  std::vector<Event> prefix;
  for (std::uint64_t t = 1; t <= 3; ++t)
    prefix.push_back(testing::quadratic_event(t, Matrix::Identity(1, 1), Vector::Zero(1)));
  CHECK(edit_history(prefix, make_deletion_set({}, 3, DeletionMode::Random)).size() == 3);
  const auto edited = edit_history(prefix, make_deletion_set({2}, 3, DeletionMode::Random));
  REQUIRE(edited.size() == 2);
  CHECK(edited[0].index == 1);
  CHECK(edited[1].index == 3);

  std::vector<Event> big;
  for (std::uint64_t t = 1; t <= 50; ++t)
    big.push_back(testing::quadratic_event(t, Matrix::Identity(1, 1), Vector::Zero(1)));
  std::vector<SampleIndex> del;
  std::uniform_int_distribution<SampleIndex> pick(1, 50);
  while (del.size() < 7) {
    const auto i = pick(rng);
    if (std::find(del.begin(), del.end(), i) == del.end()) del.push_back(i);
  }
  std::vector<SampleIndex> oracle;
  for (const auto& e : big)
    if (std::find(del.begin(), del.end(), e.index) == del.end()) oracle.push_back(e.index);
  std::vector<SampleIndex> got;
  for (const auto& e : edit_history(big, make_deletion_set(del, 50, DeletionMode::Random)))
    got.push_back(e.index);
  CHECK(got == oracle);
}

TEST_CASE("base64 known vectors") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  for (std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"})
    CHECK(base64_decode(base64_encode(s)) == s);
  CHECK_THROWS_AS(base64_decode("abc"), Error);
}

TEST_CASE("stream records round-trip") {
  for (Regime r : {Regime::Quadratic, Regime::Logistic}) {
    StreamConfig c = testing::small_stream_config();
    c.regime = r;
    c.length = 40;
    c.deletion_time = 20;
    c.horizon = 10;
    EventStream s = generate_stream(c, 6);
    s.events.insert(s.events.begin() + 10, Event::remove(10, 3));
    std::stringstream buf;
    write_stream(buf, s);
    const EventStream back = read_stream(buf);
    CHECK(back.regime == r);
    CHECK(back.dimension == s.dimension);
    CHECK(back.seed == 6);
    REQUIRE(back.events.size() == s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      CHECK(back.events[i].op == s.events[i].op);
      CHECK(back.events[i].index == s.events[i].index);
      CHECK(back.events[i].time == s.events[i].time);
      if (s.events[i].payload) CHECK(same_payload(*back.events[i].payload, *s.events[i].payload));
    }
    if (r == Regime::Quadratic) {
      // Shared curvature is shared again after reading.
      CHECK(std::get<QuadraticSample>(*back.events[0].payload).hessian ==
            std::get<QuadraticSample>(*back.events[1].payload).hessian);
    }
  }
  std::istringstream bad("1,insert,1,@@@@\n");
  CHECK_THROWS_AS(read_stream(bad), Error);
}
