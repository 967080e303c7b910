#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dae/checkpoint.hpp"
#include "dae/errors.hpp"
#include "dae/theory.hpp"
#include "dae/training.hpp"
#include "test_util.hpp"

using namespace dae;

namespace {

ModelConfig toy_config(ModelKind kind, std::size_t width = 16) {
    ModelConfig c;
    c.kind = kind;
    c.encoder = {{10, width, width, 2}, Activation::Tanh};
    c.decoder = {{2, width, width, 10}, Activation::Tanh};
    c.codebook_size = 16;
    return c;
}

LabeledDataset toy_data(std::uint64_t seed, std::size_t per_cluster = 25) {
    MixtureSpec spec;
    spec.seed = seed;
    return make_toy_dataset(spec, per_cluster, 1).train;
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor*>& params) {
    std::vector<std::vector<double>> out;
    for (const auto* p : params) out.push_back(p->values());
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(TrainStage, ZeroEpochsLeavesModelUnchanged) {
    auto model = Model::init(toy_config(ModelKind::Vae), 1);
    const auto before = snapshot(model.parameters());
    StageSchedule schedule;
    schedule.epochs = 0;
    const auto log = train_stage(model, toy_data(1), schedule, {});
    EXPECT_TRUE(log.records.empty());
    EXPECT_EQ(snapshot(model.parameters()), before);
}

TEST(TrainStage, FrozenGroupsAreBitIdentical) {
    for (auto kind : {ModelKind::Ae, ModelKind::Vae, ModelKind::Vq}) {
        auto model = Model::init(toy_config(kind), 2);
        StageSchedule schedule;
        schedule.epochs = 10;
        schedule.batch_size = 32;
        schedule.frozen = {std::string(kEncoderGroup)};
        if (kind == ModelKind::Vq) schedule.frozen.insert(std::string(kCodebookGroup));
        const auto enc = model.checksum(kEncoderGroup);
        const auto enc_values = snapshot(model.group(kEncoderGroup));
        const auto dec = model.checksum(kDecoderGroup);
        const auto log = train_stage(model, toy_data(2), schedule, {});
        EXPECT_EQ(log.records.size(), 10u);
        EXPECT_EQ(model.checksum(kEncoderGroup), enc);
        EXPECT_EQ(snapshot(model.group(kEncoderGroup)), enc_values);
        EXPECT_NE(model.checksum(kDecoderGroup), dec);
    }
}

TEST(TrainStage, LogIsCompleteAndFinite) {
    auto model = Model::init(toy_config(ModelKind::Vae), 3);
    StageSchedule schedule;
    schedule.stage_id = 2;
    schedule.epochs = 7;
    const auto log = train_stage(model, toy_data(3), schedule, {});
    ASSERT_EQ(log.records.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(log.records[i].stage, 2);
        EXPECT_EQ(log.records[i].epoch, i + 1);
        EXPECT_TRUE(std::isfinite(log.records[i].recon_loss));
        EXPECT_TRUE(std::isfinite(log.records[i].reg_loss));
    }
}

TEST(TrainStage, DeterministicPerSeed) {
    auto run = [] {
        auto model = Model::init(toy_config(ModelKind::Vq), 4);
        StageSchedule schedule;
        schedule.epochs = 5;
        schedule.batch_size = 16;
        schedule.seed = 99;
        const auto log = train_stage(model, toy_data(4), schedule, {});
        std::ostringstream out;
        write_train_log_csv(out, log, false);
        return std::pair{out.str(), model.checksum(kDecoderGroup)};
    };
    EXPECT_EQ(run(), run());
}

TEST(TrainStage, UnknownFrozenGroupIsConfigError) {
    auto model = Model::init(toy_config(ModelKind::Ae), 5);
    StageSchedule schedule;
    schedule.frozen = {"codebook"};
    try {
        train_stage(model, toy_data(5), schedule, {});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "frozen");
    }
}

TEST(TrainStage, DimensionMismatchRejected) {
    auto model = Model::init(toy_config(ModelKind::Ae), 5);
    LabeledDataset bad{Tensor::zeros({4, 3}), {0, 1, 2, 3}};
    EXPECT_THROW(train_stage(model, bad, {}, {}), ContractError);
}

TEST(TrainStage, NonFiniteLossReportsLocation) {
    auto model = Model::init(toy_config(ModelKind::Ae), 6);
    auto data = toy_data(6);
    for (auto& v : data.points.values()) v *= 1e160;
    StageSchedule schedule;
    schedule.epochs = 2;
    try {
        train_stage(model, data, schedule, {});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
        EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
    }
}

TEST(TrainStage, LinearAutoencoderReachesPcaOptimum) {
    // Correlated zero-mean 2-D Gaussian; single-layer encoder/decoder are affine.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    const std::size_t n = 512;
    Eigen::Matrix2d mix;
    mix << 2.0, 0.0, 1.2, 0.5;
    Tensor points = Tensor::zeros({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d x = mix * Eigen::Vector2d(normal(rng), normal(rng));
        points(i, 0) = x(0);
        points(i, 1) = x(1);
    }
    LabeledDataset data{points, std::vector<int>(n, 0)};

    ModelConfig config;
    config.kind = ModelKind::Ae;
    config.encoder = {{2, 1}, Activation::Tanh};
    config.decoder = {{1, 2}, Activation::Tanh};
    auto model = Model::init(config, 7);
    StageSchedule schedule;
    schedule.epochs = 500;
    schedule.batch_size = 128;
    AdamHyper hyper;
    hyper.lr = 1e-2;
    train_stage(model, data, schedule, hyper);

    const auto recon = model.reconstruct(points);
    double mse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) mse += std::pow(recon[i] - points[i], 2);
    mse /= static_cast<double>(points.size());

    // With biases the optimum is PCA on centered data.
    Eigen::MatrixXd x(2, n);
    for (std::size_t i = 0; i < n; ++i) x.col(static_cast<Eigen::Index>(i)) << points(i, 0), points(i, 1);
    const Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
    const double optimum = pca_reconstruction_error(centered, 1) / static_cast<double>(points.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(centered * centered.transpose());
    EXPECT_NEAR(optimum, eig.eigenvalues()(0) / static_cast<double>(points.size()), 1e-12);
    EXPECT_LE(std::abs(mse - optimum), 0.05 * optimum) << "mse " << mse << " optimum " << optimum;
}

TEST(TrainStage, TrainingMakesProgress) {
    for (auto kind : {ModelKind::Ae, ModelKind::Vae, ModelKind::Vq}) {
        auto model = Model::init(toy_config(kind, 32), 8);
        StageSchedule schedule;
        schedule.epochs = 40;
        schedule.batch_size = 32;
        const auto log = train_stage(model, toy_data(8, 50), schedule, {});
        std::vector<double> first, last;
        for (std::size_t i = 0; i < 4; ++i) first.push_back(log.records[i].recon_loss);
        for (std::size_t i = 36; i < 40; ++i) last.push_back(log.records[i].recon_loss);
        EXPECT_LT(median(last), median(first)) << model_kind_name(kind);
    }
}

TEST(AuxDecoder, HalvedWidth) {
    const auto plan = build_aux_decoder({{2, 128, 128, 10}, Activation::Tanh}, WeakDecoderMode::halved());
    EXPECT_EQ(plan.config.layer_dims, (std::vector<std::size_t>{2, 64, 64, 10}));
    EXPECT_TRUE(plan.fresh_init);
    EXPECT_EQ(plan.dropout_p, 0.0);
}

TEST(AuxDecoder, DropoutKeepsStructureAndEvalMatchesReference) {
    const MlpConfig reference{{2, 16, 16, 10}, Activation::Tanh};
    const auto plan = build_aux_decoder(reference, WeakDecoderMode::dropout(0.5));
    EXPECT_EQ(plan.config, reference);
    EXPECT_FALSE(plan.fresh_init);
    EXPECT_EQ(plan.dropout_p, 0.5);

    std::mt19937_64 rng(9);
    auto mlp = Mlp::init(reference, rng);
    const auto z = dae::testing::random_tensor({5, 2}, rng);
    Graph g;
    const auto eval = mlp.forward(g, g.constant(z), {plan.dropout_p, DropoutMode::Eval, 3});
    EXPECT_EQ(eval.value().values(), mlp.predict(z).values());
}

TEST(AuxDecoder, InvalidModesRejected) {
    const MlpConfig reference{{2, 16, 10}, Activation::Tanh};
    EXPECT_THROW(build_aux_decoder(reference, WeakDecoderMode::dropout(1.0)), ContractError);
    EXPECT_THROW(build_aux_decoder(reference, WeakDecoderMode::dropout(-0.1)), ContractError);
    EXPECT_THROW(build_aux_decoder(reference, WeakDecoderMode::none()), ContractError);
}

TEST(RunDae, EqualSplit) {
    DaeConfig config;
    config.total_epochs = 80;
    EXPECT_EQ(config.stage1_epochs(), 40u);
    EXPECT_EQ(config.stage2_epochs(), 40u);
}

class RunDaeModes : public ::testing::TestWithParam<std::pair<ModelKind, WeakDecoderKind>> {};

TEST_P(RunDaeModes, EncoderFrozenAcrossStageTwo) {
    const auto [kind, weak] = GetParam();
    DaeConfig config;
    config.model = toy_config(kind);
    config.total_epochs = 6;
    config.batch_size = 32;
    config.weak_decoder = weak == WeakDecoderKind::Dropout ? WeakDecoderMode::dropout(0.5) : WeakDecoderMode::halved();
    config.seed = 11;
    const auto result = run_dae(config, toy_data(11));

    ASSERT_EQ(result.log.records.size(), 6u);
    EXPECT_EQ(result.log.stage(1).size(), 3u);
    EXPECT_EQ(result.log.stage(2).size(), 3u);

    auto final_model = result.model;
    auto stage1 = result.stage1_model;
    EXPECT_EQ(snapshot(final_model.group(kEncoderGroup)), snapshot(stage1.group(kEncoderGroup)));
    if (kind == ModelKind::Vq) EXPECT_EQ(snapshot(final_model.group(kCodebookGroup)), snapshot(stage1.group(kCodebookGroup)));
    EXPECT_EQ(final_model.config().decoder.layer_dims, config.model.decoder.layer_dims);
    if (weak == WeakDecoderKind::HalvedWidth) {
        EXPECT_EQ(stage1.config().decoder.layer_dims, (std::vector<std::size_t>{2, 8, 8, 10}));
    } else {
        EXPECT_EQ(stage1.config().decoder.layer_dims, config.model.decoder.layer_dims);
    }
}

TEST_P(RunDaeModes, StageTwoReproducibleFromCheckpoint) {
    const auto [kind, weak] = GetParam();
    DaeConfig config;
    config.model = toy_config(kind);
    config.total_epochs = 6;
    config.batch_size = 32;
    config.weak_decoder = weak == WeakDecoderKind::Dropout ? WeakDecoderMode::dropout(0.5) : WeakDecoderMode::halved();
    config.seed = 12;
    const auto data = toy_data(12);
    const auto full = run_dae(config, data);

    const auto reloaded = model_from_json(nlohmann::json::parse(model_to_json(full.stage1_model).dump()));
    const auto stage2 = run_dae_stage2(reloaded, config, data);

    std::ostringstream a, b;
    TrainLog expected;
    for (const auto& r : full.log.stage(2)) expected.records.push_back(r);
    write_train_log_csv(a, expected, false);
    write_train_log_csv(b, stage2.log, false);
    EXPECT_EQ(a.str(), b.str());
    auto m1 = full.model;
    auto m2 = stage2.model;
    EXPECT_EQ(m1.checksum(kDecoderGroup), m2.checksum(kDecoderGroup));
}

INSTANTIATE_TEST_SUITE_P(
    Modes, RunDaeModes,
    ::testing::Values(std::pair{ModelKind::Ae, WeakDecoderKind::Dropout}, std::pair{ModelKind::Vae, WeakDecoderKind::Dropout},
                      std::pair{ModelKind::Vq, WeakDecoderKind::Dropout}, std::pair{ModelKind::Vae, WeakDecoderKind::HalvedWidth},
                      std::pair{ModelKind::Vq, WeakDecoderKind::HalvedWidth}),
    [](const auto& info) {
        return std::string(model_kind_name(info.param.first)) +
               (info.param.second == WeakDecoderKind::Dropout ? "_dropout" : "_halved");
    });

TEST(RunDae, OddTotalWithEqualSplitRejected) {
    DaeConfig config;
    config.model = toy_config(ModelKind::Ae);
    config.total_epochs = 5;
    EXPECT_THROW(run_dae(config, toy_data(13)), ConfigError);
}

TEST(RunSingleStage, MatchesRequestedEpochs) {
    SingleStageConfig config;
    config.model = toy_config(ModelKind::Ae);
    config.epochs = 3;
    config.batch_size = 64;
    const auto result = run_single_stage(config, toy_data(14));
    EXPECT_EQ(result.log.records.size(), 3u);
    for (const auto& r : result.log.records) EXPECT_EQ(r.stage, 1);
}

TEST(TrainLogCsv, Header) {
    TrainLog log;
    log.records.push_back({2, 3, 0.5, 0.25, 1.0});
    std::ostringstream with, without;
    write_train_log_csv(with, log);
    write_train_log_csv(without, log, false);
    EXPECT_EQ(with.str().substr(0, with.str().find('\n')), "stage,epoch,recon_loss,reg_loss,seconds");
    EXPECT_EQ(without.str().substr(0, without.str().find('\n')), "stage,epoch,recon_loss,reg_loss");
}
