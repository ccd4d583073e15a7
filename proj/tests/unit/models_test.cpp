#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "factuality/autodiff/grad_check.hpp"
#include "factuality/errors.hpp"
#include "factuality/models/checkpoint.hpp"
#include "factuality/models/model.hpp"
#include "test_util.hpp"

namespace factuality::models {
namespace {

using testing_util::random_encoded;
using testing_util::small_config;
using Vec = std::vector<double>;

Vec values(const Tape& tape, Var v) {
  auto s = tape.value(v);
  return Vec(s.begin(), s.end());
}

// Plain-double LSTM step, written directly from the cell equations.
struct RefCell {
  const LstmCell& p;
  Activation g;

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
  double act(double x) const { return g == Activation::Tanh ? std::tanh(x) : std::max(0.0, x); }

  static Vec affine(const Tensor& w, const Vec& z, const Tensor& b) {
    Vec out(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) acc += w[i * z.size() + j] * z[j];
      out[i] = acc + b[i];
    }
    return out;
  }

  std::pair<Vec, Vec> step(const Vec& h_prev, const Vec& c_prev, const Vec& x) const {
    Vec z = h_prev;
    z.insert(z.end(), x.begin(), x.end());
    Vec f = affine(p.W_f, z, p.b_f), i = affine(p.W_i, z, p.b_i), o = affine(p.W_o, z, p.b_o),
        c_hat = affine(p.W_c, z, p.b_c);
    Vec c(f.size()), h(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
      c[k] = sigmoid(i[k]) * act(c_hat[k]) + sigmoid(f[k]) * c_prev[k];
      h[k] = sigmoid(o[k]) * act(c[k]);
    }
    return {h, c};
  }
};

// Reference stacked L-biLSTM: returns [layer][token] states per direction.
std::pair<std::vector<std::vector<Vec>>, std::vector<std::vector<Vec>>> reference_linear(
    const BiLstmStack& stack, const Tensor& inputs) {
  const std::size_t n = inputs.rows();
  const std::size_t h = stack.hidden();
  std::vector<Vec> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = Vec(inputs.row(t).begin(), inputs.row(t).end());
  std::vector<std::vector<Vec>> fwd, bwd;
  for (const BiLayer& layer : stack.layers) {
    std::vector<Vec> hf(n), hb(n);
    RefCell cf{layer.forward, stack.g}, cb{layer.backward, stack.g};
    Vec hp(h, 0.0), cp(h, 0.0);
    for (std::size_t t = 0; t < n; ++t) std::tie(hp, cp) = cf.step(hp, cp, x[t]), hf[t] = hp;
    hp.assign(h, 0.0);
    cp.assign(h, 0.0);
    for (std::size_t t = n; t-- > 0;) std::tie(hp, cp) = cb.step(hp, cp, x[t]), hb[t] = hp;
    for (std::size_t t = 0; t < n; ++t) {
      x[t] = hf[t];
      x[t].insert(x[t].end(), hb[t].begin(), hb[t].end());
    }
    fwd.push_back(hf);
    bwd.push_back(hb);
  }
  return {fwd, bwd};
}

double max_abs_diff(const Vec& a, const Vec& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void randomize(Model& model, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& [name, t] : model.parameters()) {
    for (double& v : t->values()) v = u(rng);
  }
}

TEST(InitTest, SameSeedGivesBitwiseIdenticalParameters) {
  const ModelConfig config = small_config(Architecture::Hybrid, 2, 6);
  EXPECT_TRUE(Model(config, 3) == Model(config, 3));
  EXPECT_FALSE(Model(config, 3) == Model(config, 4));
}

TEST(InitTest, StackingRuleAndXavierBounds) {
  ModelConfig config;
  config.arch = Architecture::Linear;
  config.layers = 2;
  const Model model(config, 1);
  const auto& layers = model.linear()->layers;
  EXPECT_EQ(layers[0].forward.W_f.shape(), (autodiff::Shape{300, 600}));
  EXPECT_EQ(layers[1].forward.W_f.shape(), (autodiff::Shape{300, 900}));
  EXPECT_EQ(config.representation_dim(), 600u);
  EXPECT_EQ(model.head("default").V1.shape(), (autodiff::Shape{300, 600}));
  const double bound = std::sqrt(6.0 / 900.0);
  for (double v : layers[0].forward.W_c.values()) EXPECT_LE(std::abs(v), bound);
  for (double v : layers[0].backward.b_o.values()) EXPECT_EQ(v, 0.0);

  ModelConfig hybrid = config;
  hybrid.arch = Architecture::Hybrid;
  EXPECT_EQ(hybrid.representation_dim(), 1200u);
}

TEST(InitTest, RejectsThreeLayers) {
  ModelConfig config = small_config(Architecture::Linear, 3);
  EXPECT_THROW(Model(config, 0), ConfigError);
  config.layers = 0;
  EXPECT_THROW(Model(config, 0), ConfigError);
  config.layers = 1;
  config.heads = {"a", "a"};
  EXPECT_THROW(Model(config, 0), ConfigError);
}

TEST(LinearTest, ZeroWeightsAndInputsGiveZeroStates) {
  Model model(small_config(Architecture::Linear, 2), 5);
  for (auto& [name, t] : model.parameters()) std::fill(t->values().begin(), t->values().end(), 0.0);
  EncodedSentence s;
  s.inputs = Tensor({3, 4});
  s.tree = chain_structure(3);
  Tape tape;
  for (Var v : model.encode(tape, s)) {
    for (double x : tape.value(v)) EXPECT_EQ(x, 0.0);
  }
}

TEST(LinearTest, MatchesReferenceRecurrence) {
  std::mt19937_64 rng(17);
  for (std::size_t layers : {1u, 2u}) {
    for (std::size_t n : {1u, 2u, 5u}) {
      Model model(small_config(Architecture::Linear, layers, 5), rng());
      randomize(model, rng);
      const EncodedSentence s = random_encoded(rng, n, 5);
      Tape tape;
      const StackStates states = model.run_linear(tape, s);
      const auto [fwd, bwd] = reference_linear(*model.linear(), s.inputs);
      for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t t = 0; t < n; ++t) {
          EXPECT_LT(max_abs_diff(values(tape, states.forward[l][t]), fwd[l][t]), 1e-12);
          EXPECT_LT(max_abs_diff(values(tape, states.backward[l][t]), bwd[l][t]), 1e-12);
        }
      }
    }
  }
}

TEST(LinearTest, ReversalSwapsDirections) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Model model(small_config(Architecture::Linear, 1 + trial % 2), rng());
    randomize(model, rng);
    const EncodedSentence s = random_encoded(rng, 5, 4);
    Model swapped = model;
    auto& layers = swapped.linear()->layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      std::swap(layers[l].forward, layers[l].backward);
      if (l == 0) continue;
      // Upper layers read [h_fwd; h_bwd]: swap those input column blocks too.
      for (LstmCell* cell : {&layers[l].forward, &layers[l].backward}) {
        for (Tensor* w : {&cell->W_f, &cell->W_i, &cell->W_o, &cell->W_c}) {
          const std::size_t cols = w->cols();
          for (std::size_t r = 0; r < w->rows(); ++r) {
            for (std::size_t k = 0; k < 4; ++k) std::swap((*w)[r * cols + 4 + k], (*w)[r * cols + 8 + k]);
          }
        }
      }
    }
    EncodedSentence reversed = s;
    for (std::size_t t = 0; t < 5; ++t) {
      auto src = s.inputs.row(4 - t);
      std::copy(src.begin(), src.end(), reversed.inputs.values().begin() + static_cast<long>(t * 4));
    }
    Tape a, b;
    const StackStates sa = model.run_linear(a, s);
    const StackStates sb = swapped.run_linear(b, reversed);
    for (std::size_t t = 0; t < 5; ++t) {
      EXPECT_LT(max_abs_diff(values(a, sa.forward.back()[t]), values(b, sb.backward.back()[4 - t])), 1e-12);
      EXPECT_LT(max_abs_diff(values(a, sa.backward.back()[t]), values(b, sb.forward.back()[4 - t])), 1e-12);
    }
  }
}

TEST(TreeEncoderTest, ChainTreeMatchesLinearRecurrence) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t layers = 1 + trial % 2;
    ModelConfig lc = small_config(Architecture::Linear, layers, 4);
    ModelConfig tc = small_config(Architecture::Tree, layers, 4);
    tc.tree_activation = Activation::Tanh;
    Model linear(lc, rng());
    randomize(linear, rng);
    Model tree(tc, 0);
    tree.tree()->layers = linear.linear()->layers;
    const std::size_t n = 1 + rng() % 7;
    EncodedSentence s = random_encoded(rng, n, 4);
    s.tree = chain_structure(n);
    Tape a, b;
    const StackStates ls = linear.run_linear(a, s);
    const StackStates ts = tree.run_tree(b, s);
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t t = 0; t < n; ++t) {
        EXPECT_LT(max_abs_diff(values(a, ls.forward[l][t]), values(b, ts.forward[l][t])), 1e-12);
        EXPECT_LT(max_abs_diff(values(a, ls.backward[l][t]), values(b, ts.backward[l][t])), 1e-12);
      }
    }
  }
}

TEST(TreeEncoderTest, LeafUpwardStateIsAZeroBoundaryStep) {
  std::mt19937_64 rng(2);
  Model model(small_config(Architecture::Tree, 1), 8);
  const EncodedSentence s = testing_util::random_encoded(rng, 4, 4);
  Tape tape;
  const StackStates states = model.run_tree(tape, s);
  const RefCell ref{model.tree()->layers[0].forward, Activation::Relu};
  for (std::size_t t = 0; t < 4; ++t) {
    if (!s.tree.children[t].empty()) continue;
    const Vec x(s.inputs.row(t).begin(), s.inputs.row(t).end());
    const auto [h, c] = ref.step(Vec(4, 0.0), Vec(4, 0.0), x);
    EXPECT_LT(max_abs_diff(values(tape, states.forward[0][t]), h), 1e-15);
  }
}

std::vector<std::size_t> subtree(const corpus::TreeStructure& tree, std::size_t t) {
  std::vector<std::size_t> out{t};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t c : tree.children[out[i]]) out.push_back(c);
  }
  return out;
}

TEST(TreeEncoderTest, FigureOneUpwardStateIgnoresOutsideContext) {
  const corpus::Sentence fig = testing_util::figure_one_sentence();
  std::mt19937_64 rng(12);
  Model model(small_config(Architecture::Tree, 2), 4);
  EncodedSentence s = random_encoded(rng, fig.size(), 4);
  s.tree = corpus::tree_structure(fig);
  EXPECT_EQ(subtree(s.tree, 3).size(), 5u);  // leave, to, trace, ., no
  EncodedSentence perturbed = s;
  perturbed.inputs.values()[0] += 0.75;  // "Jo"
  Tape a, b;
  const StackStates sa = model.run_tree(a, s);
  const StackStates sb = model.run_tree(b, perturbed);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(values(a, sa.forward[l][3]), values(b, sb.forward[l][3]));
  }
  // Downward, "leave" sees only its ancestors' inputs at layer 1; "Jo" reaches
  // it at layer 2 through the upward state of "failed".
  EXPECT_EQ(values(a, sa.backward[0][3]), values(b, sb.backward[0][3]));
  EXPECT_NE(values(a, sa.backward[1][3]), values(b, sb.backward[1][3]));
}

TEST(HybridTest, FirstHalfIsTheLinearEncoder) {
  std::mt19937_64 rng(3);
  const Model hybrid(small_config(Architecture::Hybrid, 2), 77);
  const Model linear(small_config(Architecture::Linear, 2), 77);
  const EncodedSentence s = random_encoded(rng, 5, 4);
  Tape a, b;
  const auto ha = hybrid.encode(a, s);
  const auto lb = linear.encode(b, s);
  for (std::size_t t = 0; t < 5; ++t) {
    const Vec h = values(a, ha[t]);
    ASSERT_EQ(h.size(), 16u);
    EXPECT_EQ(Vec(h.begin(), h.begin() + 8), values(b, lb[t]));
  }
}

TEST(StackTest, LayerOneUnchangedByStacking) {
  std::mt19937_64 rng(8);
  Model one(small_config(Architecture::Linear, 1), 1);
  Model two(small_config(Architecture::Linear, 2), 2);
  two.linear()->layers[0] = one.linear()->layers[0];
  const EncodedSentence s = random_encoded(rng, 4, 4);
  Tape a, b;
  const StackStates s1 = one.run_linear(a, s);
  const StackStates s2 = two.run_linear(b, s);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(values(a, s1.forward[0][t]), values(b, s2.forward[0][t]));
}

TEST(HeadTest, HandEvaluatedOutputs) {
  Model model(small_config(Architecture::Linear, 1, 2), 0);
  RegressionHead& head = model.head("default");
  for (Tensor* t : {&head.V1, &head.b1, &head.V2, &head.b2}) std::fill(t->values().begin(), t->values().end(), 0.0);
  head.b2[0] = -0.4;
  Tape tape;
  const Var h = tape.constant({2.0, -1.0, 5.0, 0.5});
  EXPECT_EQ(tape.scalar(model.regress(tape, h, "default")), -0.4);
  head.b2[0] = 0.0;
  head.V1[0] = 1.0;  // first row e1
  head.V2[0] = 1.0;
  Tape tape2;
  EXPECT_EQ(tape2.scalar(model.regress(tape2, tape2.constant({2.0, -1.0, 5.0, 0.5}), "default")), 2.0);
  EXPECT_THROW(model.regress(tape2, h, "UW"), ConfigError);
}

TEST(HeadTest, GradientWithRespectToInputMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  Model model(small_config(Architecture::Linear, 1, 3), 9);
  Tensor h = Tensor::vector({0.3, -0.2, 0.9, 0.1, -0.5, 0.7}, true);
  auto build = [&](Tape& tape) { return model.regress(tape, tape.leaf(h), "default"); };
  Tensor* params[] = {&h};
  EXPECT_LT(autodiff::grad_check(build, params).max_relative_error, 1e-4);
}

TEST(LossTest, HuberSumOverAnnotatedTokens) {
  Model model(small_config(Architecture::Linear, 1, 2), 0);
  RegressionHead& head = model.head("default");
  std::fill(head.V2.values().begin(), head.V2.values().end(), 0.0);
  head.b2[0] = 1.0;  // every prediction is 1.0
  std::mt19937_64 rng(1);
  const EncodedSentence s = random_encoded(rng, 3, 2);
  auto loss = [&](std::vector<std::pair<std::size_t, double>> targets) {
    Tape tape;
    return tape.scalar(model.sentence_loss(tape, s, targets, "default"));
  };
  EXPECT_EQ(loss({{0, 1.0}, {2, 1.0}}), 0.0);
  EXPECT_EQ(loss({{1, -1.0}}), 1.5);
  EXPECT_EQ(loss({{0, 0.5}, {1, -1.0}}), 1.625);
  EXPECT_THROW(loss({}), ContractError);
  Tape tape;
  std::vector<std::pair<std::size_t, double>> one{{0, 1.0}};
  EXPECT_THROW(model.sentence_loss(tape, s, one, "nope"), ConfigError);
}

struct GradCase {
  Architecture arch;
  std::size_t layers;
};

class EndToEndGradientTest : public ::testing::TestWithParam<GradCase> {};

TEST_P(EndToEndGradientTest, MatchesFiniteDifferences) {
  const GradCase c = GetParam();
  std::mt19937_64 rng(100 + static_cast<int>(c.arch) * 10 + c.layers);
  for (int trial = 0; trial < 3; ++trial) {
    Model model(small_config(c.arch, c.layers), rng());
    const std::size_t n = 3 + trial;
    EncodedSentence s = random_encoded(rng, n, 4);
    s.inputs.set_trainable(true);
    std::vector<std::pair<std::size_t, double>> targets{{0, 2.5}, {n - 1, -1.0}};
    auto build = [&](Tape& tape) { return model.sentence_loss(tape, s, targets, "default"); };
    std::vector<Tensor*> params{&s.inputs};
    for (auto& [name, t] : model.parameters()) params.push_back(t);
    const auto report = autodiff::grad_check(build, params);
    EXPECT_LT(report.max_relative_error, 1e-4);
    EXPECT_GT(report.coordinates_checked, 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Architectures, EndToEndGradientTest,
                         ::testing::Values(GradCase{Architecture::Linear, 1}, GradCase{Architecture::Linear, 2},
                                           GradCase{Architecture::Tree, 1}, GradCase{Architecture::Tree, 2},
                                           GradCase{Architecture::Hybrid, 2}));

TEST(CheckpointTest, RoundTripIsBitwise) {
  std::mt19937_64 rng(5);
  ModelConfig config = small_config(Architecture::Hybrid, 2, 3);
  config.heads = {"FactBank", "UW"};
  Model model(config, 42);
  randomize(model, rng, 1e-300 * 1e300);
  model.head("UW").b2[0] = 1.0 / 3.0;
  model.linear()->layers[0].forward.W_f[0] = -0.0;
  std::stringstream buffer;
  save_checkpoint(buffer, model, {42, 7, {{"regime", "multisimp"}}});
  const LoadedCheckpoint loaded = load_checkpoint(buffer);
  EXPECT_TRUE(loaded.model == model);
  EXPECT_EQ(loaded.info.epoch, 7u);
  EXPECT_EQ(loaded.info.seed, 42u);
  EXPECT_EQ(loaded.info.metadata.at("regime"), "multisimp");
  EXPECT_TRUE(std::signbit(loaded.model.linear()->layers[0].forward.W_f[0]));
}

TEST(CheckpointTest, RejectsTruncatedAndForeignFiles) {
  Model model(small_config(Architecture::Linear, 1, 3), 1);
  std::stringstream buffer;
  save_checkpoint(buffer, model, {});
  const std::string bytes = buffer.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(load_checkpoint(truncated), DataError);
  std::istringstream foreign("hello world, definitely not a checkpoint");
  EXPECT_THROW(load_checkpoint(foreign), DataError);
}

TEST(CheckpointTest, ConfigJsonRejectsUnknownFields) {
  const ModelConfig config = small_config(Architecture::Tree, 2, 8);
  EXPECT_EQ(config_from_json(config_to_json(config)), config);
  EXPECT_THROW(config_from_json({{"arch", "linear"}, {"dropout", 0.5}}), ConfigError);
  EXPECT_THROW(config_from_json({{"layers", 3}}), ConfigError);
}

}  // namespace
}  // namespace factuality::models
