#include "chirp/mlp.hpp"

#include "chirp/random.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace chirp;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-sample loss evaluated through forward() only.
double sample_loss(const Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
  const Eigen::VectorXd o = forward(net, x);
  return (o - t).squaredNorm() / static_cast<double>(t.size());
}

TrainingSet random_set(std::size_t rows, std::size_t inputs, std::size_t classes, Rng& rng) {
  TrainingSet set;
  set.inputs.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(inputs));
  std::vector<std::size_t> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    labels[i] = rng.index(classes);
    for (std::size_t c = 0; c < inputs; ++c)
      set.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          rng.normal() + (c == 0 ? 2.0 * static_cast<double>(labels[i]) : 0.0);
  }
  set.targets = one_hot(labels, classes);
  return set;
}

TrainingSet xor_set() {
  TrainingSet set;
  set.inputs.resize(4, 2);
  set.inputs << 0, 0, 0, 1, 1, 0, 1, 1;
  set.targets.resize(4, 1);
  set.targets << 0, 1, 1, 0;
  return set;
}

}  // namespace

TEST_CASE("network shapes") {
  const NetworkSpec big{28, 14, 1, 14};
  CHECK(big.weight_count() == 616);
  const auto net = init_network(big, 3);
  CHECK(net.weight_count() == 616);
  CHECK(net.weights.size() == 2);
  CHECK(net.weights[0].rows() == 29);
  CHECK(net.weights[0].cols() == 14);

  const NetworkSpec eq7{4, 9, 1, 9};
  CHECK_NOTHROW(init_network(eq7, 1));
  CHECK(eq7.to_string() == "ANN(4, [9, 1], 9)");

  const auto deep = init_network(NetworkSpec{5, 3, 3, 2}, 1);
  CHECK(deep.weights.size() == 4);
  CHECK(deep.weight_count() == 6 * 3 + 4 * 3 + 4 * 3 + 4 * 2);

  CHECK_THROWS(NetworkSpec{0, 1, 1, 2}.validate());
  CHECK_THROWS(NetworkSpec{1, 0, 1, 2}.validate());
  CHECK_THROWS(NetworkSpec{1, 1, 0, 2}.validate());
}

TEST_CASE("init_network is seeded and bounded") {
  const NetworkSpec spec{6, 5, 2, 3};
  const auto a = init_network(spec, 42);
  const auto b = init_network(spec, 42);
  const auto c = init_network(spec, 43);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= 0.5);
  }
  CHECK(a.weights[0] != c.weights[0]);
  CHECK(a.input_mean == Eigen::VectorXd::Zero(6));
  CHECK(a.input_std == Eigen::VectorXd::Ones(6));
}

TEST_CASE("forward") {
  auto net = init_network(NetworkSpec{3, 4, 1, 2}, 1);
  for (auto& w : net.weights) w.setZero();
  const Eigen::Vector3d any(5.0, -2.0, 0.3);
  CHECK(forward(net, any).isApproxToConstant(0.5));

  Rng rng(2);
  const auto random_net = init_network(NetworkSpec{3, 4, 2, 3}, 9);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(10 * rng.normal(), 10 * rng.normal(), 10 * rng.normal());
    const Eigen::VectorXd o = forward(random_net, x);
    CHECK((o.array() > 0.0).all());
    CHECK((o.array() < 1.0).all());
    CHECK(classify(random_net, x).index == argmax(o));
  }
  CHECK_THROWS_AS(forward(random_net, Eigen::Vector2d(1, 2)), DimensionMismatch);
}

TEST_CASE("forward matches a hand-computed 2-2-2 net") {
  auto net = init_network(NetworkSpec{2, 2, 1, 2}, 1);
  net.weights[0].resize(3, 2);
  net.weights[0] << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6;
  net.weights[1].resize(3, 2);
  net.weights[1] << 0.05, -0.05, 0.7, -0.8, 0.9, 1.0;

  const double h1 = logistic(0.1 + 0.3 * 1.0 - 0.5 * 2.0);
  const double h2 = logistic(-0.2 + 0.4 * 1.0 + 0.6 * 2.0);
  const double o1 = logistic(0.05 + 0.7 * h1 + 0.9 * h2);
  const double o2 = logistic(-0.05 - 0.8 * h1 + 1.0 * h2);

  const Eigen::VectorXd o = forward(net, Eigen::Vector2d(1.0, 2.0));
  CHECK(std::abs(o[0] - o1) < 1e-12);
  CHECK(std::abs(o[1] - o2) < 1e-12);

  // With normalization the same weights see (x - mean) / std.
  net.input_mean = Eigen::Vector2d(1.0, 1.0);
  net.input_std = Eigen::Vector2d(0.5, 0.25);
  const Eigen::VectorXd shifted = forward(net, Eigen::Vector2d(1.5, 1.5));
  CHECK(std::abs(shifted[0] - o1) < 1e-12);
  CHECK(std::abs(shifted[1] - o2) < 1e-12);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(13);
  constexpr double eps = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    auto net = init_network(NetworkSpec{3, 4, 1, 2}, 100 + trial);
    for (auto& w : net.weights) w *= 4.0;  // leave the near-linear regime
    net.input_mean = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    net.input_std = Eigen::Vector3d(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2));
    const Eigen::Vector3d x(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector2d t(rng.index(2) == 0 ? 1.0 : 0.0, rng.uniform01());

    const auto grads = gradient(net, x, t);
    for (std::size_t l = 0; l < net.weights.size(); ++l)
      for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
          Network plus = net, minus = net;
          plus.weights[l](r, c) += eps;
          minus.weights[l](r, c) -= eps;
          const double numeric = (sample_loss(plus, x, t) - sample_loss(minus, x, t)) / (2 * eps);
          const double analytic = grads[l](r, c);
          const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
          worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("deeper nets also pass the finite-difference check") {
  Rng rng(17);
  auto net = init_network(NetworkSpec{4, 3, 3, 3}, 5);
  const Eigen::Vector4d x(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  const Eigen::Vector3d t(0, 1, 0);
  const auto grads = gradient(net, x, t);
  double worst = 0.0;
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
      Network plus = net, minus = net;
      plus.weights[l](i) += 1e-4;
      minus.weights[l](i) -= 1e-4;
      const double numeric = (sample_loss(plus, x, t) - sample_loss(minus, x, t)) / 2e-4;
      worst = std::max(worst, std::abs(numeric - grads[l](i)) / std::max({std::abs(numeric), std::abs(grads[l](i)), 1e-7}));
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("train_epoch") {
  Rng rng(1);
  TrainingSet one;
  one.inputs = Eigen::MatrixXd::Random(1, 3);
  one.targets = Eigen::MatrixXd(1, 2);
  one.targets << 1.0, 0.0;
  auto net = init_network(NetworkSpec{3, 4, 1, 2}, 7);

  TrainingConfig small;
  small.learning_rate = 1e-3;
  small.momentum = 0.0;
  SgdState<double> sgd(net, 1);
  const double before = mse(net, one);
  const double after = train_epoch(net, one, small, sgd);
  CHECK(after < before);

  TrainingConfig frozen;
  frozen.learning_rate = 0.0;
  const auto set = random_set(20, 3, 2, rng);
  auto still = init_network(NetworkSpec{3, 4, 1, 2}, 7);
  const auto copy = still.weights;
  SgdState<double> sgd2(still, 1);
  for (int e = 0; e < 3; ++e) train_epoch(still, set, frozen, sgd2);
  for (std::size_t l = 0; l < copy.size(); ++l) CHECK(still.weights[l] == copy[l]);

  TrainingSet wrong{Eigen::MatrixXd::Zero(2, 5), Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(train_epoch(still, wrong, frozen, sgd2), DimensionMismatch);
}

TEST_CASE("XOR reaches the MSE target") {
  const auto set = xor_set();
  TrainingConfig config;
  config.learning_rate = 0.5;
  config.momentum = 0.9;
  config.max_epochs = 5000;
  config.test_patience = 5000;  // the test set is the training set
  config.seed = 1;
  const auto result = train(init_network(NetworkSpec{2, 2, 1, 1}, 1), set, set, config);
  CHECK(result.state.stop_reason == StopReason::TargetReached);
  CHECK(result.state.train_mse < 0.01);
  CHECK(result.state.epoch <= 5000);
  for (Eigen::Index i = 0; i < 4; ++i)
    CHECK(std::round(forward(result.network, set.inputs.row(i).transpose())[0]) == set.targets(i, 0));
}

TEST_CASE("label-shuffled test targets stop on test worsening with the best snapshot") {
  Rng rng(4);
  const auto train_set = random_set(60, 4, 3, rng);
  auto test_set = random_set(30, 4, 3, rng);
  std::vector<Eigen::Index> perm(30);
  for (Eigen::Index i = 0; i < 30; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(std::span(perm));
  Eigen::MatrixXd shuffled(30, 3);
  for (Eigen::Index i = 0; i < 30; ++i) shuffled.row(i) = test_set.targets.row(perm[static_cast<std::size_t>(i)]);
  // Move every label to a wrong class so that learning the train rule hurts.
  for (Eigen::Index i = 0; i < 30; ++i) {
    Eigen::Index c = 0;
    test_set.targets.row(i).maxCoeff(&c);
    shuffled.row(i).setZero();
    shuffled(i, (c + 1) % 3) = 1.0;
  }
  test_set.targets = shuffled;

  TrainingConfig config;
  config.max_epochs = 2000;
  config.target_mse = 0.0;
  const auto init = init_network(NetworkSpec{4, 5, 1, 3}, 2);
  const auto result = train(init, train_set, test_set, config);
  CHECK(result.state.stop_reason == StopReason::TestWorsening);
  CHECK(result.state.epochs_run < config.max_epochs);
  CHECK(result.state.epochs_run == result.state.epoch + config.test_patience);
  CHECK(mse(result.network, test_set) == doctest::Approx(result.state.test_mse));

  // Replaying the same trajectory without stopping reaches the final-epoch net.
  TrainingConfig replay = config;
  replay.max_epochs = result.state.epochs_run;
  replay.test_patience = replay.max_epochs + 1;
  replay.stall_threshold = -std::numeric_limits<double>::infinity();
  const auto last = train(init, train_set, test_set, replay);
  CHECK(last.state.stop_reason == StopReason::EpochCap);
  CHECK(last.state.epoch == result.state.epochs_run);
  CHECK(result.state.test_mse <= last.state.test_mse);
}

TEST_CASE("stopping edge cases") {
  Rng rng(8);
  const auto set = random_set(20, 2, 2, rng);
  TrainingConfig none;
  none.max_epochs = 0;
  const auto init = init_network(NetworkSpec{2, 2, 1, 2}, 3);
  const auto result = train(init, set, set, none);
  CHECK(result.state.stop_reason == StopReason::EpochCap);
  CHECK(result.state.epoch == 0);
  for (std::size_t l = 0; l < init.weights.size(); ++l) CHECK(result.network.weights[l] == init.weights[l]);

  TrainingConfig frozen;
  frozen.learning_rate = 0.0;
  frozen.test_patience = 1000;
  frozen.stall_window = 100;
  const auto stalled = train(init, set, set, frozen);
  CHECK(stalled.state.stop_reason == StopReason::TrainStalled);
  CHECK(stalled.state.epoch == 100);

  CHECK_THROWS_AS(train(init, TrainingSet{Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2)}, set, frozen), EmptySet);
  CHECK_THROWS_AS(train(init, set, TrainingSet{Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 2)}, frozen), EmptySet);
}

TEST_CASE("training is deterministic") {
  Rng rng(10);
  const auto train_set = random_set(40, 3, 2, rng);
  const auto test_set = random_set(10, 3, 2, rng);
  TrainingConfig config;
  config.max_epochs = 200;
  const auto a = train(init_network(NetworkSpec{3, 3, 1, 2}, 5), train_set, test_set, config);
  const auto b = train(init_network(NetworkSpec{3, 3, 1, 2}, 5), train_set, test_set, config);
  for (std::size_t l = 0; l < a.network.weights.size(); ++l) CHECK(a.network.weights[l] == b.network.weights[l]);
  CHECK(a.state.epoch == b.state.epoch);
}

TEST_CASE("normalization makes decisions invariant to input scale") {
  Rng rng(12);
  const auto set = random_set(50, 3, 3, rng);
  auto scaled = set.inputs;
  scaled.col(0) *= 731.0;
  scaled.col(2) *= 0.004;

  auto a = init_network(NetworkSpec{3, 4, 1, 3}, 6);
  auto b = a;
  fit_input_norm(a, set.inputs);
  fit_input_norm(b, scaled);
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const Eigen::VectorXd oa = forward(a, set.inputs.row(i).transpose());
    const Eigen::VectorXd ob = forward(b, scaled.row(i).transpose());
    CHECK((oa - ob).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(argmax(oa) == argmax(ob));
  }

  auto flat = init_network(NetworkSpec{2, 2, 1, 2}, 1);
  fit_input_norm(flat, Eigen::MatrixXd::Constant(5, 2, 3.0));
  CHECK(flat.input_std.minCoeff() == doctest::Approx(1e-8));
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax(Eigen::Vector3d(0.1, 0.9, 0.3)) == 1);
  CHECK(argmax(Eigen::Vector2d(0.5, 0.5)) == 0);
  CHECK(argmax(Eigen::Vector4d(0.2, 0.7, 0.7, 0.1)) == 1);
}

TEST_CASE("one_hot") {
  const auto t = one_hot({2, 0, 1}, 3);
  CHECK(t.rows() == 3);
  CHECK(t(0, 2) == 1.0);
  CHECK(t.sum() == 3.0);
  CHECK_THROWS_AS(one_hot({3}, 3), DimensionMismatch);
}

TEST_CASE("mse is the mean over samples and outputs") {
  auto net = init_network(NetworkSpec{1, 1, 1, 2}, 1);
  for (auto& w : net.weights) w.setZero();
  TrainingSet set{Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd(2, 2)};
  set.targets << 1, 0, 0, 0;
  // Outputs are all 0.5: errors 0.25, 0.25, 0.25, 0.25.
  CHECK(mse(net, set) == doctest::Approx(0.25));
}
