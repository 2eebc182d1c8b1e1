#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "holotrack/error.hpp"
#include "holotrack/evaluate.hpp"
#include "oracles.hpp"

using namespace holotrack;

TEST_CASE("smoothed dice") {
    const std::vector<double> x{1, 0, 1, 0}, y{1, 1, 0, 0};
    CHECK(std::abs(smoothed_dice(x, y) - 0.6) < 1e-12);
    const std::vector<double> zeros(5, 0.0);
    CHECK(smoothed_dice(zeros, zeros) == 1.0);
    CHECK(smoothed_dice(y, y) == 1.0);
    CHECK_THROWS_AS(smoothed_dice(x, zeros), DataError);

    // adding disjoint mass only lowers the score
    std::vector<double> grow = y;
    grow.resize(10, 0.0);
    std::vector<double> truth = grow;
    double prev = smoothed_dice(grow, truth);
    for (std::size_t i = 4; i < 10; ++i) {
        grow[i] = 0.5;
        const double s = smoothed_dice(grow, truth);
        CHECK(s < prev);
        CHECK(s > 0.0);
        prev = s;
    }
}

TEST_CASE("binary metrics fixtures") {
    const auto a = binary_metrics({10, 0, 0, 0});
    CHECK(*a.pod == 1.0);
    CHECK(*a.far == 0.0);
    CHECK(*a.csi == 1.0);
    CHECK(*a.f1 == 1.0);

    const auto b = binary_metrics({3, 1, 2, 4});
    CHECK(std::abs(*b.pod - 0.6) < 1e-12);
    CHECK(std::abs(*b.far - 0.25) < 1e-12);
    CHECK(std::abs(*b.csi - 0.5) < 1e-12);
    CHECK(std::abs(*b.f1 - 2.0 / 3.0) < 1e-12);

    const auto c = binary_metrics({0, 5, 0, 0});
    CHECK_FALSE(c.pod.has_value());
    CHECK(*c.far == 1.0);
    CHECK(*c.csi == 0.0);

    const auto none = binary_metrics({0, 0, 0, 9});
    CHECK_FALSE(none.pod);
    CHECK_FALSE(none.far);
    CHECK_FALSE(none.csi);
    CHECK_FALSE(none.f1);
}

TEST_CASE("binary metric identities on random tables") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> n(0, 30);
    for (int i = 0; i < 2000; ++i) {
        const Contingency c{n(rng), n(rng), n(rng), n(rng)};
        const auto m = binary_metrics(c);
        if (!m.csi) continue;
        CHECK(*m.csi >= 0.0);
        CHECK(*m.csi <= 1.0);
        if (m.pod) CHECK(*m.csi <= *m.pod + 1e-15);
        if (c.tp > 0) CHECK(*m.csi <= 1.0 - *m.far + 1e-15);
        CHECK(*m.f1 == doctest::Approx(2 * *m.csi / (1 + *m.csi)));
    }
}

TEST_CASE("AUC and max CSI") {
    const std::vector<ScoredLabel> hand{{0.9, true}, {0.6, false}, {0.4, true}, {0.1, false}};
    const auto r = auc_and_max_csi(hand);
    CHECK(std::abs(*r.auc - 0.75) < 1e-12);

    const std::vector<ScoredLabel> same{{0.5, true}, {0.5, false}, {0.5, true}, {0.5, false}};
    CHECK(std::abs(*auc_and_max_csi(same).auc - 0.5) < 1e-12);

    const std::vector<ScoredLabel> perfect{{0.9, true}, {0.8, true}, {0.3, false}, {0.1, false}};
    const auto p = auc_and_max_csi(perfect);
    CHECK(*p.auc == 1.0);
    CHECK(p.max_csi == 1.0);
    CHECK(p.best_threshold == 0.8);

    const std::vector<ScoredLabel> one_class{{0.9, true}, {0.2, true}};
    CHECK_FALSE(auc_and_max_csi(one_class).auc);
    CHECK_FALSE(auc_and_max_csi({}).auc);
}

TEST_CASE("AUC is invariant under monotone score transforms") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution coin(0.4);
    for (int t = 0; t < 50; ++t) {
        std::vector<ScoredLabel> a(40), b(40);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = {std::round(u(rng) * 10) / 10, coin(rng)};
            b[i] = {std::exp(3 * a[i].score) - 7, a[i].label};
        }
        const auto ra = auc_and_max_csi(a), rb = auc_and_max_csi(b);
        if (!ra.auc) continue;
        CHECK(*ra.auc == doctest::Approx(*rb.auc).epsilon(1e-12));
        CHECK(ra.max_csi == doctest::Approx(rb.max_csi));
    }
}

TEST_CASE("pairing examples") {
    const std::vector<Particle> a{{0, 0, 0, 1}, {5, 5, 5, 2}};
    const auto self = pair_particles(a, a);
    CHECK(self.pairs.size() == 2);
    for (const auto& p : self.pairs) CHECK(p.distance == 0.0);
    CHECK(self.unmatched_pred.empty());
    CHECK(self.unmatched_true.empty());

    const std::vector<Particle> one{{0, 0, 0, 1}};
    const auto r = pair_particles(one, a);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].truth == 0);
    CHECK(r.unmatched_true == std::vector<std::size_t>{1});
    CHECK(pair_particles({}, a).unmatched_true.size() == 2);
}

TEST_CASE("pairing matches the exhaustive greedy reference") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<int> n(0, 8), coord(0, 3);
        auto draw = [&] {
            std::vector<Particle> v(static_cast<std::size_t>(n(rng)));
            for (auto& p : v) p = {double(coord(rng)), double(coord(rng)), double(coord(rng)), double(coord(rng))};
            return v;
        };
        const auto pred = draw(), truth = draw();
        const auto got = pair_particles(pred, truth);
        const auto want = oracle::greedy_pairs(pred, truth);
        REQUIRE(got.pairs.size() == want.size());
        CHECK(got.pairs.size() == std::min(pred.size(), truth.size()));
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.pairs[i].pred == want[i].pred);
            CHECK(got.pairs[i].truth == want[i].truth);
            CHECK(got.pairs[i].distance == want[i].distance);
        }
        CHECK(got.unmatched_pred.size() + got.pairs.size() == pred.size());
        CHECK(got.unmatched_true.size() + got.pairs.size() == truth.size());

        // swapping roles gives the same distances
        const auto swapped = pair_particles(truth, pred);
        REQUIRE(swapped.pairs.size() == got.pairs.size());
        for (std::size_t i = 0; i < got.pairs.size(); ++i) CHECK(swapped.pairs[i].distance == got.pairs[i].distance);
    }
}

TEST_CASE("match statistics") {
    const std::vector<Particle> truth{{0, 0, 0, 10}, {100, 0, 0, 10}, {200, 0, 0, 10}};
    const std::vector<Particle> pred{{3, 0, 0, 10}, {100, 4, 0, 10}, {200, 0, 0, 10}};
    const auto s = match_stats(pair_particles(pred, truth), pred, truth);
    CHECK(std::abs(*s.rmse - std::sqrt(25.0 / 3.0)) < 1e-12);
    CHECK(*s.match_accuracy == 1.0);
    CHECK(*s.match_f1 == 1.0);
    CHECK(*s.mae[0] == doctest::Approx(1.0));
    CHECK(*s.mae[1] == doctest::Approx(4.0 / 3.0));
    CHECK(*s.mae[2] == 0.0);

    const auto perfect = match_stats(pair_particles(truth, truth), truth, truth);
    CHECK(*perfect.rmse == 0.0);

    std::vector<Particle> doubled = truth;
    for (const auto& p : truth) doubled.push_back({p.x + 1000, p.y, p.z, p.d});
    const auto d = match_stats(pair_particles(doubled, truth), doubled, truth);
    CHECK(*d.match_accuracy == 1.0);
    CHECK(std::abs(*d.match_f1 - 2.0 / 3.0) < 1e-12);

    const auto empty = match_stats(pair_particles(pred, {}), pred, {});
    CHECK_FALSE(empty.match_accuracy);
    CHECK_FALSE(empty.rmse);
    CHECK(*empty.match_f1 == 0.0);
}

TEST_CASE("particle-level contingency and report") {
    const std::vector<Particle> truth{{0, 0, 0, 10}, {5000, 0, 0, 10}};
    const std::vector<Particle> pred{{10, 0, 0, 10}, {9000, 0, 0, 10}, {20000, 0, 0, 10}};
    const auto pairing = pair_particles(pred, truth);
    const auto c = detection_contingency(pairing, pred.size(), truth.size(), 1000.0);
    CHECK(c.tp == 1);
    CHECK(c.fp == 2);
    CHECK(c.fn == 1);

    const auto r = evaluate_hologram("h", pred, truth, 1000.0);
    CHECK(r.n_true == 2);
    CHECK(r.n_pred == 3);
    CHECK(*r.binary.csi == doctest::Approx(0.25));
    CHECK_FALSE(r.auc);

    std::ostringstream out;
    write_metric_reports(out, std::vector<MetricReport>{r});
    CHECK(out.str().find("h,") != std::string::npos);
}

TEST_CASE("mask contingency") {
    const std::vector<float> p{0.9f, 0.2f, 0.6f, 0.4f};
    const std::vector<std::uint8_t> t{1, 1, 0, 0};
    const auto c = mask_contingency(p, t);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
}

TEST_CASE("mean report skips undefined cells") {
    MetricReport a, b;
    a.binary.pod = 0.5;
    b.binary.pod = 1.0;
    a.auc = 0.8;
    const std::vector<MetricReport> rs{a, b};
    const auto m = mean_report(rs);
    CHECK(*m.binary.pod == 0.75);
    CHECK(*m.auc == 0.8);
    CHECK_FALSE(m.binary.csi);
}

TEST_CASE("threshold sweep edge cases") {
    std::vector<Detection> dets;
    for (int i = 0; i < 6; ++i) {
        Detection d;
        d.x = i * 100.0;
        d.plane_index = i;
        dets.push_back(d);
    }
    const std::vector<Particle> truth{{0, 0, 0, 0}};
    const std::vector<double> thr{1e-6, 150.0, 1e9};
    const auto rows = threshold_sweep(dets, truth, thr);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].particle_count == dets.size());
    CHECK(rows[0].n_clusters == 0);
    CHECK(rows[2].particle_count == 1);
    CHECK(rows[1].particle_count == 3);
    CHECK(*rows[2].match_accuracy == 1.0);

    const auto ts = log_thresholds(10, 100000, 5);
    REQUIRE(ts.size() == 5);
    CHECK(ts.front() == 10);
    CHECK(ts.back() == doctest::Approx(100000));
    CHECK(ts[2] == doctest::Approx(1000));

    const auto mean = mean_sweep({rows, rows});
    CHECK(mean.size() == 3);
    CHECK(mean[1].particle_count == 3);
}

TEST_CASE("histograms") {
    const std::array<HistogramAxis, 4> axes{HistogramAxis{"x", 0, 100, 10}, HistogramAxis{"y", 0, 100, 10},
                                            HistogramAxis{"z", 0, 100, 10}, HistogramAxis{"d", 0, 100, 10}};
    const std::vector<Particle> ps{{5, 15, 25, 35}, {-3, 150, 100, 99.9}};
    const auto xs = histogram_counts(ps, axes[0], 0);
    CHECK(xs[0] == 2.0);
    CHECK(histogram_counts(ps, axes[1], 1)[9] == 1.0);
    CHECK(histogram_counts(ps, axes[2], 2)[9] == 1.0);

    const auto same = emit_histograms({ps, ps}, {ps, ps}, axes);
    REQUIRE(same.size() == 4);
    for (const auto& t : same) {
        CHECK(t.pred_mean == t.true_mean);
        CHECK(t.pred_sd == t.true_sd);
    }
    const auto empty = emit_histograms({{}, {}}, {ps, ps}, axes);
    for (const auto& t : empty)
        for (double v : t.pred_mean) CHECK(v == 0.0);
    CHECK_THROWS_AS(emit_histograms({{}}, {ps, ps}, axes), DataError);

    std::ostringstream csv, svg;
    write_histogram_csv(csv, same);
    write_histogram_svg(svg, same[2]);
    CHECK(csv.str().rfind("coordinate,bin_lo", 0) == 0);
    CHECK(svg.str().find("<svg") != std::string::npos);
}

TEST_CASE("uniform depths give a flat z histogram") {
    OpticalConfig c;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> z(c.z_min, c.z_max);
    std::vector<Particle> ps(20000);
    for (auto& p : ps) p.z = z(rng);
    const int bins = 20;
    const auto counts = histogram_counts(ps, {"z", c.z_min, c.z_max, bins}, 2);
    const double expected = double(ps.size()) / bins;
    double chi2 = 0.0;
    for (double k : counts) chi2 += (k - expected) * (k - expected) / expected;
    // 19 degrees of freedom: the 99.9% quantile is about 43.8
    CHECK(chi2 < 43.8);
}
