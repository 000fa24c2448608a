#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include <teamrl/gradcheck.hpp>
#include <teamrl/nets.hpp>
#include <teamrl/selftest.hpp>

using namespace teamrl;

namespace {

constexpr int kObs = 6;
constexpr int kCap = 2;

template <typename S>
Mat<S> random_mat(Eigen::Index r, Eigen::Index c, RngStream& rng, double lo = -1.0,
                  double hi = 1.0) {
  Mat<S> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(lo, hi));
  return m;
}

GraphBatch<double> random_batch(int n, RngStream& rng) {
  GraphBatch<double> b;
  b.node_features = random_mat<double>(n, kObs, rng);
  b.capabilities = random_mat<double>(n, kCap, rng, 0.0, 1.0);
  b.ids = Mat<double>::Zero(n, kIdPoolSize);
  for (int i = 0; i < n; ++i) b.ids(i, i % kIdPoolSize) = 1.0;
  return b;
}

struct NetFixture {
  ParamStore<double> params;
  PolicyNet<double> net;
  explicit NetFixture(Variant v, uint64_t seed = 1) : net(make(v, seed)) {}

 private:
  PolicyNet<double> make(Variant v, uint64_t seed) {
    RngStream rng = RngStream::root(seed).split("net");
    return PolicyNet<double>::create(params, v, kObs, kCap, rng);
  }
};

Mat<double> forward(const PolicyNet<double>& net, const ParamStore<double>& params,
                    const GraphBatch<double>& batch) {
  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, params);
  return net.logits(tape, p, batch).value();
}

}  // namespace

TEST_CASE("zeroed encoder maps everything to zero") {
  NetFixture f(Variant::kCaCcGnn);
  for (int i = 0; i < f.params.size(); ++i) f.params.value(i).setZero();
  RngStream rng = RngStream::root(2).split("x");
  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  auto enc = f.net.encode(tape, p, tape.leaf(random_mat<double>(4, kObs + kCap, rng)));
  CHECK(enc.rows() == 4);
  CHECK(enc.cols() == 64);
  CHECK(enc.value().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder is a row-wise map: permuting rows permutes outputs") {
  NetFixture f(Variant::kCaCcGnn);
  RngStream rng = RngStream::root(3).split("x");
  const Mat<double> x = random_mat<double>(5, kObs + kCap, rng);
  Mat<double> x_perm(5, x.cols());
  const int perm[5] = {3, 0, 4, 1, 2};
  for (int i = 0; i < 5; ++i) x_perm.row(perm[i]) = x.row(i);

  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  const Mat<double> a = f.net.encode(tape, p, tape.leaf(x)).value();
  const Mat<double> b = f.net.encode(tape, p, tape.leaf(x_perm)).value();
  for (int i = 0; i < 5; ++i) CHECK((b.row(perm[i]) - a.row(i)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder rejects wrong input width with the expected layout") {
  NetFixture f(Variant::kCaCcGnn);
  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  CHECK_THROWS_WITH_AS(f.net.encode(tape, p, tape.leaf(Mat<double>::Zero(3, kObs))),
                       doctest::Contains("expected 8"), ShapeError);
}

TEST_CASE("fixed seed reproduces encoder output bitwise") {
  const auto run = [] {
    NetFixture f(Variant::kCaCcGnn, 17);
    RngStream rng = RngStream::root(23).split("x");
    Tape<double> tape;
    auto p = BoundParams<double>::bind(tape, f.params);
    return Mat<double>(f.net.encode(tape, p, tape.leaf(random_mat<double>(3, kObs + kCap, rng)))
                           .value());
  };
  CHECK((run().array() == run().array()).all());
}

TEST_CASE("gcn with a single node reduces to the self-loop") {
  NetFixture f(Variant::kCaCcGnn);
  RngStream rng = RngStream::root(4).split("x");
  const Mat<double> h = random_mat<double>(1, 64, rng);

  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  const Mat<double> out =
      f.net.gcn_layer(tape, p, tape.leaf(h), Mat<double>::Ones(1, 1)).value();

  const auto& base = f.params;
  const std::string v = variant_name(Variant::kCaCcGnn);
  const Mat<double> phi_h =
      ((h * base.value(v + "/gcn/l0/weight")).rowwise() + base.value(v + "/gcn/l0/bias").row(0))
          .cwiseMax(0.0) *
          base.value(v + "/gcn/l1/weight") +
      base.value(v + "/gcn/l1/bias");
  CHECK((out - phi_h.cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gcn with identity transform sums neighbor features") {
  // Make phi the identity on nonnegative inputs, three identical nodes on a
  // full graph: each output row is ReLU(3v) = 3v.
  NetFixture f(Variant::kCaCcGnn);
  const std::string v = variant_name(Variant::kCaCcGnn);
  f.params.value(v + "/gcn/l0/weight") = Mat<double>::Identity(64, 64);
  f.params.value(v + "/gcn/l0/bias").setZero();
  f.params.value(v + "/gcn/l1/weight") = Mat<double>::Identity(64, 64);
  f.params.value(v + "/gcn/l1/bias").setZero();

  RngStream rng = RngStream::root(5).split("x");
  Mat<double> h(3, 64);
  const Mat<double> one = random_mat<double>(1, 64, rng, 0.0, 1.0);
  h << one, one, one;

  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  const Mat<double> out = f.net.gcn_layer(tape, p, tape.leaf(h), Mat<double>()).value();
  for (int i = 0; i < 3; ++i) CHECK((out.row(i) - 3.0 * one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn rejects asymmetric adjacency") {
  NetFixture f(Variant::kCaCcGnn);
  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, f.params);
  Mat<double> adj = Mat<double>::Zero(3, 3);
  adj(0, 1) = 1.0;
  CHECK_THROWS_AS(f.net.gcn_layer(tape, p, tape.leaf(Mat<double>::Zero(3, 64)), adj), ShapeError);
}

TEST_CASE("policy logits are permutation-equivariant for every GNN variant") {
  RngStream rng = RngStream::root(31).split("perm");
  for (const Variant v : {Variant::kIdGnn, Variant::kCaGnn, Variant::kCaCcGnn}) {
    NetFixture f(v);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 4;
      GraphBatch<double> batch = random_batch(n, rng);
      std::vector<int> perm{0, 1, 2, 3};
      for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[static_cast<size_t>(rng.uniform_int(0, i))]);
      GraphBatch<double> permuted = batch;
      for (int i = 0; i < n; ++i) {
        permuted.node_features.row(perm[static_cast<size_t>(i)]) = batch.node_features.row(i);
        permuted.capabilities.row(perm[static_cast<size_t>(i)]) = batch.capabilities.row(i);
        permuted.ids.row(perm[static_cast<size_t>(i)]) = batch.ids.row(i);
      }
      const Mat<double> base = forward(f.net, f.params, batch);
      const Mat<double> after = forward(f.net, f.params, permuted);
      for (int i = 0; i < n; ++i)
        CHECK((after.row(perm[static_cast<size_t>(i)]) - base.row(i)).cwiseAbs().maxCoeff() <
              1e-6);
    }
  }
}

TEST_CASE("robots with identical observation and capability get identical logits") {
  for (const Variant v : {Variant::kCaMlp, Variant::kCaGnn, Variant::kCaCcGnn}) {
    NetFixture f(v);
    RngStream rng = RngStream::root(6).split("x");
    GraphBatch<double> batch = random_batch(3, rng);
    batch.node_features.row(2) = batch.node_features.row(0);
    batch.capabilities.row(2) = batch.capabilities.row(0);
    const Mat<double> logits = forward(f.net, f.params, batch);
    CHECK((logits.row(2) - logits.row(0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("same parameters serve any team size") {
  NetFixture f(Variant::kCaCcGnn);
  RngStream rng = RngStream::root(8).split("x");
  for (const int n : {1, 3, 5, 15}) {
    const Mat<double> logits = forward(f.net, f.params, random_batch(n, rng));
    CHECK(logits.rows() == n);
    CHECK(logits.cols() == 5);
  }
}

TEST_CASE("intermediate widths follow the documented layout") {
  RngStream rng = RngStream::root(9).split("x");
  // CA+CC routes capability through the encoder; CA appends it around the
  // graph hop instead, widening only the action head input.
  NetFixture cc(Variant::kCaCcGnn);
  GraphBatch<double> batch = random_batch(4, rng);
  batch.capabilities.setZero();
  ForwardTrace trace_cc;
  {
    Tape<double> tape;
    auto p = BoundParams<double>::bind(tape, cc.params);
    cc.net.logits(tape, p, batch, &trace_cc);
  }
  CHECK(trace_cc.entries[0] == "encoder 4x64");
  CHECK(trace_cc.entries[1] == "gcn 4x64");
  CHECK(trace_cc.entries[2] == "pre_action 4x128");
  CHECK(trace_cc.entries[3] == "logits 4x5");

  NetFixture ca(Variant::kCaGnn);
  ForwardTrace trace_ca;
  {
    Tape<double> tape;
    auto p = BoundParams<double>::bind(tape, ca.params);
    ca.net.logits(tape, p, batch, &trace_ca);
  }
  CHECK(trace_ca.entries[0] == "encoder 4x64");
  CHECK(trace_ca.entries[1] == "gcn 4x64");
  CHECK(trace_ca.entries[2] == strfmt("pre_action 4x%d", 128 + 2 * kCap));
  CHECK(trace_ca.entries[3] == "logits 4x5");
}

TEST_CASE("variants demand the suffix they condition on") {
  NetFixture id_net(Variant::kIdGnn);
  RngStream rng = RngStream::root(10).split("x");
  GraphBatch<double> batch = random_batch(3, rng);
  batch.ids.resize(0, 0);
  CHECK_THROWS_AS(forward(id_net.net, id_net.params, batch), Error);

  NetFixture ca_net(Variant::kCaGnn);
  GraphBatch<double> no_caps = random_batch(3, rng);
  no_caps.capabilities.resize(0, 0);
  CHECK_THROWS_AS(forward(ca_net.net, ca_net.params, no_caps), Error);
}

TEST_CASE("critic with zero head outputs zero and stays deterministic") {
  ParamStore<double> params;
  RngStream rng = RngStream::root(12).split("critic");
  const CriticNet<double> critic =
      CriticNet<double>::create(params, Variant::kCaMlp, kObs, kCap, 4, rng);
  const std::string head = std::string(variant_name(Variant::kCaMlp)) + "/critic/l2";
  params.value(head + "/weight").setZero();
  params.value(head + "/bias").setZero();

  const Mat<double> input = random_mat<double>(3, 4 * (kObs + kCap), rng);
  Tape<double> tape;
  auto p = BoundParams<double>::bind(tape, params);
  const Mat<double> v1 = critic.value(tape, p, tape.leaf(input)).value();
  CHECK(v1.cwiseAbs().maxCoeff() == 0.0);

  params.value(head + "/weight").setRandom();
  Tape<double> tape2;
  auto p2 = BoundParams<double>::bind(tape2, params);
  const Mat<double> a = critic.value(tape2, p2, tape2.leaf(input)).value();
  const Mat<double> b = critic.value(tape2, p2, tape2.leaf(input)).value();
  CHECK((a.array() == b.array()).all());

  CHECK_THROWS_AS(critic.value(tape2, p2, tape2.leaf(Mat<double>::Zero(1, 7))), ShapeError);
}

TEST_CASE("critic gradient passes the finite-difference oracle") {
  CHECK(selftest::critic_gradcheck_error(99) < 1e-4);
}

TEST_CASE("hard selection takes the argmax with lowest-index ties") {
  Mat<float> logits(2, 5);
  logits.row(0) << 10, 0, 0, 0, 0;
  logits.row(1) << 1, 1, 0, 0, 0;
  const std::vector<int> actions = hard_action_select(logits);
  CHECK(actions[0] == 0);
  CHECK(actions[1] == 0);
}

TEST_CASE("selection rejects non-finite logits") {
  Mat<float> logits = Mat<float>::Zero(1, 5);
  logits(0, 2) = std::numeric_limits<float>::quiet_NaN();
  RngStream rng = RngStream::root(1);
  CHECK_THROWS_AS(hard_action_select(logits), Error);
  CHECK_THROWS_AS(soft_action_select(logits, rng), Error);
}

TEST_CASE("soft selection matches softmax frequencies and log-probs") {
  RngStream rng = RngStream::root(77).split("soft");
  Mat<float> logits = Mat<float>::Zero(1, 5);  // uniform
  std::array<int, 5> counts{};
  for (int s = 0; s < 100000; ++s) {
    const auto sample = soft_action_select(logits, rng);
    counts[static_cast<size_t>(sample.actions[0])] += 1;
    CHECK(std::abs(sample.log_probs[0] - std::log(0.2f)) < 1e-6f);
  }
  for (const int c : counts) CHECK(std::abs(c / 100000.0 - 0.2) < 0.01);

  // non-uniform rows: exp(logprob) equals the softmax probability
  Mat<float> skewed(1, 5);
  skewed << 2.0f, -1.0f, 0.5f, 0.0f, 1.0f;
  const Mat<float> probs = rowwise_softmax(skewed);
  for (int s = 0; s < 100; ++s) {
    const auto sample = soft_action_select(skewed, rng);
    CHECK(std::abs(std::exp(sample.log_probs[0]) - probs(0, sample.actions[0])) < 1e-6f);
  }
}

TEST_CASE("every policy variant passes the finite-difference oracle") {
  for (const Variant v : {Variant::kIdMlp, Variant::kIdGnn, Variant::kCaMlp, Variant::kCaGnn,
                          Variant::kCaCcGnn})
    CHECK(selftest::policy_gradcheck_error(v, 7) < 1e-4);
}
