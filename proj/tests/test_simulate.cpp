#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "holotrack/components.hpp"
#include "holotrack/error.hpp"
#include "holotrack/simulate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace holotrack;

TEST_CASE("sample_field") {
    OpticalConfig c;
    CHECK(sample_field(c, 0, {}, 1).particles.empty());
    const auto f = sample_field(c, 500, {}, 42, "h");
    REQUIRE(f.particles.size() == 500);
    CHECK(f.hologram_id == "h");
    for (const auto& p : f.particles) {
        CHECK(p.x >= 0.0);
        CHECK(p.x < c.width_um());
        CHECK(p.y >= 0.0);
        CHECK(p.y < c.height_um());
        CHECK(p.z >= 14072.0);
        CHECK(p.z <= 158928.0);
        CHECK(p.d >= 6.0);
        CHECK(p.d <= 200.0);
    }
    CHECK_NOTHROW(validate_field(f, c));
    CHECK(sample_field(c, 500, {}, 42, "h") == f);
    CHECK_FALSE(sample_field(c, 500, {}, 43, "h") == f);
    CHECK_THROWS_AS(sample_field(c, -1, {}, 1), ConfigError);
}

TEST_CASE("diameters follow the truncated gamma") {
    OpticalConfig c;
    GammaSizeDist g;
    const auto f = sample_field(c, 20000, g, 9);
    double s = 0.0;
    for (const auto& p : f.particles) s += p.d;
    const double mean = s / 20000.0;
    // gamma(2, 10) truncated below at 6 um: mean = E[D | D >= 6] (upper cap negligible)
    const double k = 6.0 / 10.0;
    const double tail = std::exp(-k) * (1.0 + k);               // P(D >= 6)
    const double tail_mean = 10.0 * std::exp(-k) * (2.0 + 2.0 * k + k * k);  // E[D; D >= 6]
    CHECK(mean == doctest::Approx(tail_mean / tail).epsilon(0.02));
}

TEST_CASE("validate_field rejects particles outside the volume") {
    OpticalConfig c;
    CHECK_THROWS_AS(validate_field({"x", {{-1.0, 10.0, 20000.0, 10.0}}}, c), DataError);
    CHECK_THROWS_AS(validate_field({"x", {{10.0, 10.0, 1000.0, 10.0}}}, c), DataError);
    CHECK_THROWS_AS(validate_field({"x", {{10.0, 10.0, 20000.0, 0.0}}}, c), DataError);
    CHECK_THROWS_AS(validate_field({"x", {{c.width_um(), 10.0, 20000.0, 5.0}}}, c), DataError);
}

TEST_CASE("stream rng depends only on (seed, stream)") {
    auto a = make_stream_rng(1, 5), b = make_stream_rng(1, 5), d = make_stream_rng(1, 6);
    const auto va = a();
    CHECK(va == b());
    CHECK(va != d());
}

TEST_CASE("rasterize_disk uses the centre-in-disk rule") {
    Grid<std::uint8_t> g(9, 9);
    // d = 2 dx at a pixel centre: centre plus the four edge neighbours
    CHECK(rasterize_disk<std::uint8_t>(g, 4 * 2.96, 4 * 2.96, 2 * 2.96, 2.96, 2.96, 1) == 5);
    CHECK(g(4, 4) == 1);
    CHECK(g(3, 4) == 1);
    CHECK(g(4, 5) == 1);
    CHECK(g(3, 3) == 0);

    // brute-force pixel test at random positions
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 40.0), ud(0.5, 30.0);
    for (int trial = 0; trial < 200; ++trial) {
        Grid<std::uint8_t> m(16, 12);
        const double x = u(rng), y = u(rng) * 0.75, d = ud(rng);
        const auto n = rasterize_disk<std::uint8_t>(m, x, y, d, 2.5, 3.0, 1);
        std::size_t want = 0;
        for (int j = 0; j < 12; ++j) {
            for (int i = 0; i < 16; ++i) {
                const bool in = std::hypot(i * 2.5 - x, j * 3.0 - y) <= d / 2;
                CHECK(static_cast<bool>(m(i, j)) == in);
                want += in;
            }
        }
        CHECK(n == want);
    }
}

TEST_CASE("empty field renders a flat 127 background") {
    OpticalConfig c;
    c.nx = 32;
    c.ny = 24;
    for (auto mode : {RenderMode::superposition, RenderMode::sequential}) {
        const auto img = render_hologram({"e", {}}, c, {mode, 127.0});
        for (auto v : img.values()) CHECK(v == 127);
    }
}

TEST_CASE("rendering is deterministic and shows rings around the particle") {
    OpticalConfig c;
    c.nx = 128;
    c.ny = 128;
    const ParticleField f{"p", {{64 * 2.96, 64 * 2.96, 30000.0, 30.0}}};
    const auto a = render_hologram(f, c);
    CHECK(a == render_hologram(f, c));
    // radially symmetric pattern: opposite points at equal radius agree
    for (int r = 3; r < 40; r += 4) {
        CHECK(std::abs(int(a(64 + r, 64)) - int(a(64 - r, 64))) <= 1);
        CHECK(std::abs(int(a(64, 64 + r)) - int(a(64 + r, 64))) <= 1);
    }
    // and it is not flat
    int lo = 255, hi = 0;
    for (auto v : a.values()) {
        lo = std::min<int>(lo, v);
        hi = std::max<int>(hi, v);
    }
    CHECK(hi - lo > 10);
}

TEST_CASE("superposition is linear for well separated particles") {
    OpticalConfig c;
    c.nx = 256;
    c.ny = 128;
    const Particle p1{60 * 2.96, 64 * 2.96, 20000.0, 20.0};
    const Particle p2{196 * 2.96, 64 * 2.96, 25000.0, 24.0};
    const auto h1 = render_hologram({"a", {p1}}, c);
    const auto h2 = render_hologram({"b", {p2}}, c);
    const auto h12 = render_hologram({"c", {p1, p2}}, c);
    int worst = 0;
    for (std::size_t i = 0; i < h12.size(); ++i) {
        const int lin = int(h1.values()[i]) + int(h2.values()[i]) - 127;
        worst = std::max(worst, std::abs(lin - int(h12.values()[i])));
    }
    // each of the three images carries up to half a gray level of rounding
    CHECK(worst <= 2);
}

TEST_CASE("sequential mode occludes") {
    OpticalConfig c;
    c.nx = 64;
    c.ny = 64;
    const ParticleField one{"s", {{32 * 2.96, 32 * 2.96, 20000.0, 20.0}}};
    // a single particle renders the same in both modes up to rounding
    const auto s = render_hologram(one, c, {RenderMode::sequential, 127.0});
    const auto p = render_hologram(one, c, {RenderMode::superposition, 127.0});
    int worst = 0;
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(int(s.values()[i]) - int(p.values()[i])));
    CHECK(worst <= 1);
}

TEST_CASE("single particle: the darkest centre pixel is within one bin of the truth") {
    OpticalConfig c;
    c.nx = 256;
    c.ny = 256;
    const Particle p{128 * 2.96, 128 * 2.96, 60000.0, 40.0};
    const auto h = normalize_by_mean(grid_cast<double>(render_hologram({"z", {p}}, c)));
    const Refocuser r(h, c);
    auto ws = r.make_workspace();
    const auto centers = plane_centers(c);
    const int truth = plane_index_for_depth(p.z, c);
    int best = -1;
    double best_amp = 1e9;
    for (int j = truth - 40; j <= truth + 40; ++j) {
        const double a = r.reconstruct(centers[static_cast<std::size_t>(j)], ws)(128, 128);
        if (a < best_amp) {
            best_amp = a;
            best = j;
        }
    }
    CHECK(std::abs(best - truth) <= 1);
}

TEST_CASE("truth masks") {
    OpticalConfig c;
    c.nx = 64;
    c.ny = 48;
    CHECK(render_truth_masks({"e", {}}, c).empty());

    const double z = plane_centers(c)[10];
    const ParticleField two{"t", {{10 * 2.96, 10 * 2.96, z, 2 * 2.96}, {40 * 2.96, 30 * 2.96, z + 1.0, 20.0}}};
    const auto masks = render_truth_masks(two, c);
    REQUIRE(masks.size() == 1);
    CHECK(masks[0].plane_index == 10);
    CHECK(masks[0].z == doctest::Approx(z));
    const auto boxes = oracle::components(masks[0].mask);
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0].count == 5);
    for (const auto& b : boxes) CHECK(std::max(b.max_x - b.min_x, b.max_y - b.min_y) + 1 <= 20.0 / 2.96 + 2);

    const ParticleField apart{"u", {{10 * 2.96, 10 * 2.96, z, 10.0}, {20 * 2.96, 10 * 2.96, z + 500.0, 10.0}}};
    const auto m2 = render_truth_masks(apart, c);
    REQUIRE(m2.size() == 2);
    CHECK(m2[0].plane_index < m2[1].plane_index);

    const auto win = truth_window(two, c, 10, 5, 5, 10, 10);
    CHECK(win.nx() == 10);
    CHECK(win(5, 5) == 1);
    CHECK(win(0, 0) == 0);
}

TEST_CASE("mask extents track the diameter") {
    OpticalConfig c;
    c.nx = 200;
    c.ny = 200;
    const auto f = sample_field(c, 40, {}, 77);
    for (const auto& p : f.particles) {
        const auto masks = render_truth_masks({"one", {p}}, c);
        REQUIRE(masks.size() == 1);
        const auto boxes = oracle::components(masks[0].mask);
        if (boxes.empty()) continue;  // sub-pixel particle between pixel centres
        const auto& b = boxes[0];
        const int extent = std::max(b.max_x - b.min_x, b.max_y - b.min_y) + 1;
        if (b.min_x > 0 && b.min_y > 0 && b.max_x < c.nx - 1 && b.max_y < c.ny - 1) {
            CHECK(std::abs(extent - p.d / c.dx) <= 2.0);
        }
    }
}

TEST_CASE("splits") {
    SplitSpec s{100, 10, 10, 3};
    const auto labels = assign_splits(120, s);
    REQUIRE(labels.size() == 120);
    CHECK(std::count(labels.begin(), labels.end(), "train") == 100);
    CHECK(std::count(labels.begin(), labels.end(), "valid") == 10);
    CHECK(std::count(labels.begin(), labels.end(), "test") == 10);
    CHECK(assign_splits(120, s) == labels);
    CHECK_THROWS_AS(assign_splits(15, s), ConfigError);
}

TEST_CASE("particles CSV round trip") {
    testutil::TempDir dir;
    std::vector<ParticleField> fields{{"a", {{1.5, 2.25, 30000.125, 7.0}, {0.1, 0.2, 0.3, 0.4}}},
                                      {"b", {{1e-7, 123456.789, 5.0, 9.999999999}}}};
    write_particles_csv(dir.path / "p.csv", fields);
    CHECK(read_particles_csv(dir.path / "p.csv") == fields);
    std::ostringstream os;
    write_particles_csv(os, {});
    CHECK(os.str() == "hid,x_um,y_um,z_um,d_um\n");
}

TEST_CASE("tile dataset plan") {
    OpticalConfig c;
    c.nx = 256;
    c.ny = 256;
    c.n_planes = 50;
    TileDatasetSpec spec;
    spec.tile = {64, 32};
    spec.seed = 1;
    const auto f = sample_field(c, 1, {}, 3, "0");
    auto plan = plan_tile_dataset({f}, c, spec);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].kind == TileKind::positive);

    const auto many = sample_field(c, 20, {}, 4, "0");
    spec.n_negatives = 100;
    spec.frac_near_focus = 0.5;
    plan = plan_tile_dataset({many}, c, spec);
    CHECK(plan.size() == 120);
    CHECK(std::count_if(plan.begin(), plan.end(), [](auto& s) { return s.kind == TileKind::near_focus; }) == 50);
    CHECK(std::count_if(plan.begin(), plan.end(), [](auto& s) { return s.kind == TileKind::random; }) == 50);
    CHECK(plan_tile_dataset({many}, c, spec) == plan);

    const auto grid = build_grid(c.nx, c.ny, spec.tile, spec.dedup);
    std::map<int, std::vector<Particle>> by_plane;
    for (const auto& p : many.particles) by_plane[plane_index_for_depth(p.z, c)].push_back(p);
    for (const auto& s : plan) {
        const auto o = grid.positions[s.tile_index];
        const auto w = truth_window(many, c, s.plane_index, o.x0, o.y0, 64, 64);
        const bool any = std::any_of(w.values().begin(), w.values().end(), [](auto v) { return v != 0; });
        if (s.kind == TileKind::random) CHECK_FALSE(any);
        if (s.kind == TileKind::near_focus) {
            bool adjacent = false;
            for (const auto& p : many.particles) {
                const int j = plane_index_for_depth(p.z, c);
                adjacent |= std::abs(j - s.plane_index) == 1;
            }
            CHECK(adjacent);
        }
    }

    // a 1-plane, 1-tile volume filled with particles has no free tiles
    OpticalConfig tiny = c;
    tiny.nx = 64;
    tiny.ny = 64;
    tiny.n_planes = 1;
    spec.n_negatives = 3;
    spec.frac_near_focus = 0.0;
    CHECK_THROWS_AS(plan_tile_dataset({sample_field(tiny, 30, {}, 1, "0")}, tiny, spec), DataError);
}

TEST_CASE("tile dataset on disk") {
    testutil::TempDir dir;
    OpticalConfig c;
    c.nx = 128;
    c.ny = 128;
    c.n_planes = 20;
    const auto f = sample_field(c, 3, {}, 8, "0000");
    const std::vector<Gray8> holos{render_hologram(f, c)};
    TileDatasetSpec spec;
    spec.tile = {64, 32};
    spec.n_negatives = 4;
    spec.seed = 2;
    const auto manifest = make_tile_dataset(holos, {f}, c, spec, dir.path / "tiles");
    std::ifstream in(manifest);
    std::string line;
    int n = 0, positives = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        ++n;
        positives += j.at("label").get<int>();
        CHECK(j.at("hid") == "0000");
        const auto tile = read_pgm(manifest.parent_path() / j.at("tile").get<std::string>());
        const auto mask = read_pgm(manifest.parent_path() / j.at("mask").get<std::string>());
        CHECK(tile.nx() == 64);
        CHECK(mask.ny() == 64);
        for (auto v : mask.values()) CHECK((v == 0 || v == 255));
    }
    CHECK(n == 7);
    CHECK(positives >= 3);
}
