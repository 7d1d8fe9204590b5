#include "helpers.hpp"

#include "hiertrack/mpn.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

using namespace hiertrack;
using hiertrack::test::SceneBuilder;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.node_dim = 4;
    c.edge_dim = 3;
    c.steps = 3;
    c.edge_init_hidden = {5};
    c.edge_hidden = {6};
    c.message_hidden = {5};
    c.node_hidden = {};
    c.class_hidden = {4};
    return c;
}

AssociationGraph random_graph(std::mt19937_64& rng, int level, int identities = 3) {
    SceneBuilder b;
    const auto nodes = test::random_tracklets(b, rng, identities, 10, 3);
    HierarchyConfig h;
    h.knn_k = 3;
    return build_graph(nodes, level, {0, 10}, h);
}

// Per-sample reference evaluation straight from the layer tensors.
Eigen::VectorXd mlp_ref(const Mlp& m, Eigen::VectorXd x) {
    const auto& layers = m.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(layers[i].weight.cols());
        for (Eigen::Index o = 0; o < y.size(); ++o) {
            double s = layers[i].bias[o];
            for (Eigen::Index k = 0; k < x.size(); ++k) s += x[k] * layers[i].weight(k, o);
            y[o] = (i + 1 < layers.size() || m.activate_output()) ? std::max(0.0, s) : s;
        }
        x = y;
    }
    return x;
}

Eigen::VectorXd concat(std::initializer_list<Eigen::VectorXd> parts) {
    Eigen::Index n = 0;
    for (const auto& p : parts) n += p.size();
    Eigen::VectorXd out(n);
    n = 0;
    for (const auto& p : parts) {
        out.segment(n, p.size()) = p;
        n += p.size();
    }
    return out;
}

// Edge-by-edge unrolled forward pass.
std::vector<double> forward_ref(const AssociationGraph& g, const ModelParams& p) {
    const auto& c = p.config;
    const Mat x = network_inputs(g, c);
    std::vector<Eigen::VectorXd> h0, h;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        Eigen::VectorXd v = mlp_ref(p.edge_init, x.row(static_cast<Eigen::Index>(e)).transpose());
        v += p.level_embeddings[static_cast<std::size_t>(g.level)].transpose();
        h0.push_back(v);
    }
    h = h0;
    std::vector<Eigen::VectorXd> nodes(g.num_nodes(), Eigen::VectorXd::Zero(c.node_dim));
    for (int s = 0; s < c.steps; ++s) {
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            const auto& [u, v] = g.edges[e];
            h[e] = mlp_ref(p.edge_update, concat({nodes[u], h[e], h0[e], nodes[v]}));
        }
        std::vector<Eigen::VectorXd> past(g.num_nodes(), Eigen::VectorXd::Zero(c.node_dim)), future = past;
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            const auto& [u, v] = g.edges[e];
            past[v] += mlp_ref(p.past_message, concat({nodes[u], h[e], h0[e], nodes[v]}));
            future[u] += mlp_ref(p.future_message, concat({nodes[v], h[e], h0[e], nodes[u]}));
        }
        for (std::size_t n = 0; n < g.num_nodes(); ++n) nodes[n] = mlp_ref(p.node_update, concat({past[n], future[n]}));
    }
    std::vector<double> out;
    for (const auto& v : h) out.push_back(1.0 / (1.0 + std::exp(-mlp_ref(p.classifier, v)[0])));
    return out;
}

double weighted_sum(const AssociationGraph& g, const ModelParams& p, const std::vector<double>& w) {
    const auto s = forward(g, p);
    double v = 0;
    for (Eigen::Index e = 0; e < s.size(); ++e) v += w[static_cast<std::size_t>(e)] * s[e];
    return v;
}

}  // namespace

TEST(MlpTest, ZeroParametersGiveZero) {
    Mlp m(3, {4}, 2, false);
    const Eigen::VectorXd y = m.forward(Eigen::VectorXd(Eigen::VectorXd::Constant(3, 7.0)));
    EXPECT_EQ(y, Eigen::VectorXd::Zero(2));
}

TEST(MlpTest, IdentityLayer) {
    Mlp m(2, {}, 2, false);
    m.layers()[0].weight = Mat::Identity(2, 2);
    Eigen::VectorXd x(2);
    x << -1.5, 2.0;
    EXPECT_EQ(m.forward(x), x);
    Mlp r(2, {}, 2, true);
    r.layers()[0].weight = Mat::Identity(2, 2);
    EXPECT_EQ(r.forward(x), Eigen::Vector2d(0.0, 2.0));
    EXPECT_THROW(m.forward(Eigen::VectorXd(Eigen::VectorXd::Zero(3))), Error);
}

TEST(MlpTest, MatchesReference) {
    auto p = ModelParams::initialize(small_config(), 3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        Mat x(4, p.edge_update.in_dim());
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
        const Mat y = p.edge_update.forward(x);
        for (Eigen::Index r = 0; r < 4; ++r) {
            EXPECT_LT((y.row(r).transpose() - mlp_ref(p.edge_update, x.row(r).transpose())).norm(), 1e-12);
        }
    }
}

TEST(Params, DefaultCountInRange) {
    const auto p = ModelParams::initialize(ModelConfig{}, 0);
    EXPECT_EQ(p.parameter_count(), 26665u);
    EXPECT_GE(p.parameter_count(), 10000u);
    EXPECT_LE(p.parameter_count(), 50000u);
    EXPECT_EQ(p.flatten().size(), p.parameter_count());
}

TEST(Params, FlattenAssignRoundTrip) {
    auto p = ModelParams::initialize(small_config(), 4);
    auto flat = p.flatten();
    auto q = ModelParams::zeros(small_config());
    q.assign(flat);
    EXPECT_EQ(q.flatten(), flat);
    q.add_scaled(p, -1.0);
    for (double v : q.flatten()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(q.assign(std::vector<double>(3)), Error);
}

TEST(Params, SeedDeterminesInitialization) {
    EXPECT_EQ(ModelParams::initialize(small_config(), 9).flatten(), ModelParams::initialize(small_config(), 9).flatten());
    EXPECT_NE(ModelParams::initialize(small_config(), 9).flatten(), ModelParams::initialize(small_config(), 10).flatten());
}

TEST(InitEmbeddings, LevelEmbeddingIsAdditive) {
    auto p = ModelParams::initialize(small_config(), 5);
    Mat x = Mat::Random(6, kEdgeFeatureWidth);
    const Mat base = init_edge_embeddings(x, 2, p);
    p.level_embeddings[2] << 0.5, -1.0, 2.0;
    const Mat shifted = init_edge_embeddings(x, 2, p);
    for (Eigen::Index r = 0; r < 6; ++r) {
        EXPECT_LT((shifted.row(r) - base.row(r) - p.level_embeddings[2]).norm(), 1e-14);
    }
    EXPECT_EQ(init_edge_embeddings(x, 1, p), base);
    EXPECT_THROW(init_edge_embeddings(x, 4, p), Error);
    EXPECT_THROW(init_edge_embeddings(x, -1, p), Error);
}

TEST(MessagePassing, IsolatedNodeGetsUpdateOfZeros) {
    const auto p = ModelParams::initialize(small_config(), 6);
    Topology t;
    t.num_nodes = 3;
    t.src = {0};
    t.dst = {1};
    auto s = initial_state(t, Mat::Random(1, 3), p);
    const auto next = message_passing_step(s, t, p, 1);
    const Eigen::VectorXd expected = mlp_ref(p.node_update, Eigen::VectorXd::Zero(8));
    EXPECT_LT((next.nodes.row(2).transpose() - expected).norm(), 1e-14);
    EXPECT_THROW(message_passing_step(s, t, p, 0), Error);
}

TEST(Forward, MatchesUnrolledReference) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = ModelParams::initialize(small_config(), static_cast<std::uint64_t>(trial));
        for (auto& e : p.level_embeddings) e.setRandom();
        const auto g = random_graph(rng, trial % 4);
        const auto s = forward(g, p);
        const auto ref = forward_ref(g, p);
        ASSERT_EQ(static_cast<std::size_t>(s.size()), ref.size());
        for (std::size_t e = 0; e < ref.size(); ++e) EXPECT_NEAR(s[static_cast<Eigen::Index>(e)], ref[e], 1e-12);
    }
}

TEST(Forward, EmptyAndSingleEdge) {
    const auto p = ModelParams::initialize(small_config(), 8);
    AssociationGraph empty;
    EXPECT_EQ(forward(empty, p).size(), 0);

    SceneBuilder b;
    auto g = build_graph({test::single(b, 0, {0, 0, 2, 4}), test::single(b, 3, {1, 0, 2, 4})}, 0, {0, 5}, {});
    ASSERT_EQ(g.num_edges(), 1u);
    const auto s = forward(g, p);
    EXPECT_NEAR(s[0], forward_ref(g, p)[0], 1e-12);
    EXPECT_GT(s[0], 0.0);
    EXPECT_LT(s[0], 1.0);
    g.level = 7;
    EXPECT_THROW(forward(g, p), Error);
}

TEST(Forward, PermutationEquivariant) {
    std::mt19937_64 rng(9);
    const auto p = ModelParams::initialize(small_config(), 10);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_graph(rng, 1, 4);
        if (g.num_edges() < 2) continue;
        std::vector<int> node_perm(g.num_nodes()), edge_perm(g.num_edges());
        std::iota(node_perm.begin(), node_perm.end(), 0);
        std::iota(edge_perm.begin(), edge_perm.end(), 0);
        std::shuffle(node_perm.begin(), node_perm.end(), rng);
        std::shuffle(edge_perm.begin(), edge_perm.end(), rng);
        AssociationGraph h = g;
        for (std::size_t n = 0; n < g.num_nodes(); ++n) h.nodes[static_cast<std::size_t>(node_perm[n])] = g.nodes[n];
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            const auto to = static_cast<std::size_t>(edge_perm[e]);
            h.edges[to] = {node_perm[static_cast<std::size_t>(g.edges[e].u)], node_perm[static_cast<std::size_t>(g.edges[e].v)]};
            h.features[to] = g.features[e];
        }
        const auto a = forward(g, p), c = forward(h, p);
        for (std::size_t e = 0; e < g.num_edges(); ++e) EXPECT_NEAR(a[static_cast<Eigen::Index>(e)], c[edge_perm[e]], 1e-12);
    }
}

TEST(Forward, Deterministic) {
    std::mt19937_64 rng(11);
    const auto g = random_graph(rng, 2);
    const auto p = ModelParams::initialize(ModelConfig{}, 1);
    EXPECT_EQ(forward(g, p), forward(g, p));
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
    std::mt19937_64 rng(12);
    const auto g = random_graph(rng, 0);
    const auto p = ModelParams::initialize(small_config(), 1);
    ForwardTape tape;
    forward(g, p, &tape);
    const auto grads = backward(tape, p, std::vector<double>(g.num_edges(), 0.0));
    for (double v : grads.flatten()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(backward(tape, p, std::vector<double>(g.num_edges() + 1, 1.0)), Error);
}

TEST(Backward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 6; ++trial) {
        const auto g = random_graph(rng, trial % 4);
        if (g.num_edges() == 0) continue;
        auto p = ModelParams::initialize(small_config(), static_cast<std::uint64_t>(100 + trial));
        for (auto& e : p.level_embeddings) e.setRandom();
        std::vector<double> w(g.num_edges());
        for (auto& x : w) x = u(rng);
        ForwardTape tape;
        forward(g, p, &tape);
        const auto grad = backward(tape, p, w).flatten();
        auto flat = p.flatten();
        const double step = 1e-6;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double keep = flat[i];
            flat[i] = keep + step;
            p.assign(flat);
            const double up = weighted_sum(g, p, w);
            flat[i] = keep - step;
            p.assign(flat);
            const double down = weighted_sum(g, p, w);
            flat[i] = keep;
            const double numeric = (up - down) / (2 * step);
            EXPECT_LE(std::abs(numeric - grad[i]), 1e-6 + 1e-4 * std::max(std::abs(numeric), std::abs(grad[i])))
                << "parameter " << i << " trial " << trial;
        }
        p.assign(flat);
    }
}

TEST(Backward, OnlyUsedLevelEmbeddingReceivesGradient) {
    std::mt19937_64 rng(14);
    const auto g = random_graph(rng, 2);
    const auto p = ModelParams::initialize(small_config(), 2);
    ForwardTape tape;
    forward(g, p, &tape);
    const auto grads = backward(tape, p, std::vector<double>(g.num_edges(), 1.0));
    EXPECT_EQ(grads.level_embeddings[0].norm(), 0.0);
    EXPECT_EQ(grads.level_embeddings[1].norm(), 0.0);
    EXPECT_GT(grads.level_embeddings[2].norm(), 0.0);
    EXPECT_EQ(grads.level_embeddings[3].norm(), 0.0);
}

class CheckpointTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("hiertrack_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTrip) {
    Checkpoint c{ModelParams::initialize(small_config(), 3), 42, OptimizerState{7, {}, {}}};
    c.optimizer->first_moment.assign(c.params.parameter_count(), 0.25);
    c.optimizer->second_moment.assign(c.params.parameter_count(), 0.5);
    save_checkpoint(dir_ / "a.ckpt", c);
    const auto back = load_checkpoint(dir_ / "a.ckpt", small_config());
    EXPECT_EQ(back.params.config, small_config());
    EXPECT_EQ(back.params.flatten(), c.params.flatten());
    EXPECT_EQ(back.iteration, 42u);
    ASSERT_TRUE(back.optimizer);
    EXPECT_EQ(back.optimizer->step, 7u);
    EXPECT_EQ(back.optimizer->second_moment, c.optimizer->second_moment);
}

TEST_F(CheckpointTest, Errors) {
    const Checkpoint c{ModelParams::initialize(small_config(), 3), 1, std::nullopt};
    save_checkpoint(dir_ / "a.ckpt", c);
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        ADD_FAILURE() << "no error";
        return ErrorKind::Contract;
    };
    EXPECT_EQ(kind_of([&] { load_checkpoint(dir_ / "missing.ckpt"); }), ErrorKind::Io);
    EXPECT_EQ(kind_of([&] { load_checkpoint(dir_ / "a.ckpt", ModelConfig{}); }), ErrorKind::InvalidConfig);

    std::string bytes;
    {
        std::ifstream in(dir_ / "a.ckpt", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    bytes[bytes.size() / 2] ^= 0x5a;
    std::ofstream(dir_ / "b.ckpt", std::ios::binary) << bytes;
    EXPECT_EQ(kind_of([&] { load_checkpoint(dir_ / "b.ckpt"); }), ErrorKind::InvalidInput);
    std::ofstream(dir_ / "c.ckpt", std::ios::binary) << "not a checkpoint";
    EXPECT_EQ(kind_of([&] { load_checkpoint(dir_ / "c.ckpt"); }), ErrorKind::InvalidInput);
}
