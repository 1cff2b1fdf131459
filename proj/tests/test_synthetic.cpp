#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lcprune/error.hpp"
#include "lcprune/evaluation.hpp"
#include "lcprune/rng.hpp"
#include "lcprune/synthetic.hpp"

using namespace lcprune;

namespace {

GmmSpec three_component_spec() {
    GmmSpec spec;
    spec.dim = 2;
    spec.components = {{0, 0.2, {0.5, -1.0}, {0.8, 1.5}},
                       {0, 0.3, {2.0, 1.0}, {0.5, 0.3}},
                       {1, 0.5, {-1.5, 0.5}, {1.2, 2.0}}};
    return spec;
}

GmmSpec single_component(std::size_t dim, double variance, std::uint64_t seed) {
    GmmSpec spec;
    spec.dim = dim;
    spec.seed = seed;
    spec.components = {{0, 1.0, std::vector<double>(dim, 1.5), std::vector<double>(dim, variance)}};
    return spec;
}

}  // namespace

TEST(GmmDensity, StandardNormalAtZero) {
    const auto d = gmm_density(single_component(1, 1.0, 0), std::vector<double>{1.5});
    EXPECT_NEAR(d.total, 0.3989422804014327, 1e-15);
    EXPECT_NEAR(d.per_class.at(0), d.total, 1e-15);
}

TEST(GmmDensity, DuplicatedComponentLeavesDensityUnchanged) {
    GmmSpec one = single_component(2, 0.7, 0);
    GmmSpec two = one;
    two.components = {one.components[0], one.components[0]};
    two.components[0].weight = two.components[1].weight = 0.5;
    const std::vector<double> z = {0.2, 2.9};
    EXPECT_NEAR(gmm_density(two, z).total, gmm_density(one, z).total, 1e-16);
}

TEST(GmmDensity, MatchesClosedFormScript) {
    const auto spec = three_component_spec();
    struct Case {
        std::vector<double> z;
        double p, p0, p1;
    };
    const std::vector<Case> cases = {
        {{0.0, 0.0}, 0.037132213799837305, 0.03647067386351825, 0.03779375373615635},
        {{1.0, -0.5}, 0.02689255663910365, 0.047867239784454806, 0.005917873493752497},
        {{-2.0, 1.5}, 0.03612001894268979, 0.0001455797875326035, 0.07209445809784698},
        {{2.5, 0.8}, 0.09069311502651492, 0.18125839606466762, 0.00012783398836222967},
        {{0.3, 3.0}, 0.002936814184800688, 0.00029108851507794937, 0.005582539854523427},
    };
    for (const auto& c : cases) {
        const auto d = gmm_density(spec, c.z);
        EXPECT_NEAR(d.total, c.p, 1e-10);
        ASSERT_EQ(d.per_class.size(), 2u);
        EXPECT_NEAR(d.per_class[0], c.p0, 1e-10);
        EXPECT_NEAR(d.per_class[1], c.p1, 1e-10);
    }
}

TEST(GmmDensity, IntegratesToOne) {
    const auto spec = reference_gmm();
    Rng rng(123);
    const double x0 = -10, x1 = 10, y0 = -7, y1 = 7;
    const double area = (x1 - x0) * (y1 - y0);
    const std::size_t draws = 1000000;
    double sum = 0.0;
    std::vector<double> z(2);
    for (std::size_t i = 0; i < draws; ++i) {
        z[0] = x0 + (x1 - x0) * rng.uniform();
        z[1] = y0 + (y1 - y0) * rng.uniform();
        sum += gmm_density(spec, z).total;
    }
    EXPECT_NEAR(area * sum / static_cast<double>(draws), 1.0, 0.02);
}

TEST(GmmSpec, Validation) {
    auto spec = three_component_spec();
    EXPECT_NO_THROW(spec.validate());
    EXPECT_EQ(spec.num_classes(), 2u);
    spec.components[0].weight = 0.3;
    EXPECT_THROW(spec.validate(), DataError);
    spec = three_component_spec();
    spec.components[1].variance[0] = 0.0;
    EXPECT_THROW(spec.validate(), DataError);
    spec = three_component_spec();
    spec.components[2].mean.pop_back();
    EXPECT_THROW(spec.validate(), DataError);
}

TEST(ReferenceGmm, Layout) {
    const auto spec = reference_gmm();
    ASSERT_EQ(spec.components.size(), 2u);
    EXPECT_EQ(spec.seed, 7u);
    EXPECT_EQ(spec.components[0].mean, (std::vector<double>{-3.0, 0.0}));
    EXPECT_EQ(spec.components[1].mean, (std::vector<double>{3.0, 0.0}));
    EXPECT_EQ(spec.components[0].variance, (std::vector<double>{1.0, 1.0}));
    EXPECT_DOUBLE_EQ(spec.components[0].weight, 0.5);
    EXPECT_THROW(reference_gmm(1, 0), UsageError);
}

TEST(SampleGmm, TinyVarianceCollapsesOnMean) {
    const auto data = sample_gmm(single_component(3, 1e-12, 4), 50);
    EXPECT_EQ(data.pack.n_samples, 50u);
    for (const float v : data.pack.layers[0].features.values) EXPECT_NEAR(v, 1.5, 1e-4);
    for (const auto label : *data.pack.labels) EXPECT_EQ(label, 0u);
}

TEST(SampleGmm, ComponentCountsWithinBinomialBound) {
    auto spec = reference_gmm(21);
    const std::size_t n = 10000;
    const auto data = sample_gmm(spec, n);
    std::size_t first = 0;
    for (const auto c : data.component) first += c == 0;
    EXPECT_LE(std::abs(static_cast<double>(first) - n / 2.0), 3.0 * std::sqrt(n / 4.0));
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ((*data.pack.labels)[i], spec.components[data.component[i]].class_id);
}

TEST(SampleGmm, DeterministicAndDensitiesConsistent) {
    const auto spec = three_component_spec();
    const auto a = sample_gmm(spec, 300);
    const auto b = sample_gmm(spec, 300);
    EXPECT_EQ(a.pack, b.pack);
    EXPECT_EQ(a.density, b.density);
    EXPECT_EQ(a.densities_csv(), b.densities_csv());
    for (std::size_t i = 0; i < 300; ++i) {
        const auto row = a.pack.layers[0].features.row(i);
        const std::vector<double> z(row.begin(), row.end());
        const auto d = gmm_density(spec, z);
        EXPECT_EQ(a.density[i], d.total);
        EXPECT_EQ(a.class_density[i], d.per_class[(*a.pack.labels)[i]]);
        EXPECT_GT(a.density[i], 0.0);
    }
    auto other = spec;
    other.seed = 1;
    EXPECT_NE(sample_gmm(other, 300).pack, a.pack);
}

TEST(SampleGmm, DensitiesCsvLayout) {
    const auto data = sample_gmm(reference_gmm(), 3);
    const auto csv = data.densities_csv();
    EXPECT_EQ(csv.rfind("index,p,p_class\n0,", 0), 0u) << csv;
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(DensityCheck, ReferenceMixtureIsPositivelyCorrelated) {
    KnnConfig cfg;
    cfg.k = 10;
    const auto result = prop31_check(reference_gmm(7), 2000, cfg);
    EXPECT_NEAR(result.rho, 0.18017878844842816, 1e-9);
    const auto [high, low] = result.decile_confidence();
    EXPECT_GT(high, low);
    EXPECT_EQ(result.rows.size(), 2000u);
}

TEST(DensityCheck, ShuffledDensityIsUncorrelated) {
    KnnConfig cfg;
    const auto result = prop31_check(reference_gmm(7), 2000, cfg);
    std::vector<double> conf, dens;
    for (const auto& row : result.rows) {
        conf.push_back(row.confidence);
        dens.push_back(row.density);
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 gen(seed);
        auto shuffled = dens;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        EXPECT_LT(std::abs(spearman(conf, shuffled)), 0.1) << "seed " << seed;
    }
}

TEST(DensityCheck, SingleClassWithAllNeighborsIsConstant) {
    KnnConfig cfg;
    cfg.k = 199;
    EXPECT_THROW(prop31_check(reference_gmm(3, 1), 200, cfg), NumericError);
    cfg.k = 200;
    EXPECT_THROW(prop31_check(reference_gmm(3), 200, cfg), NumericError);
}
