#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cleanet/series.hpp"

using namespace cleanet;

namespace {

std::filesystem::path write_temp_csv(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

} // namespace

TEST_CASE("load_csv parses metrics and shapes") {
    const auto path = write_temp_csv("cleanet_basic.csv",
                                     "a,b,c\n"
                                     "1,2,3\n"
                                     "4,5,6\n"
                                     "7,8,9\n"
                                     "1,1,1\n"
                                     "2,2,2\n"
                                     "3,3,3\n"
                                     "4,4,4\n"
                                     "5,5,5\n"
                                     "6,6,6\n"
                                     "7,7,7\n");
    const LoadedSeries loaded = load_csv(path);
    REQUIRE(loaded.series.num_metrics() == 3);
    REQUIRE(loaded.series.num_timestamps() == 10);
    REQUIRE(loaded.series.metric_names == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(loaded.series.values(2, 1) == 6.0);
    REQUIRE_FALSE(loaded.labels.has_value());
}

TEST_CASE("load_csv splits a label column") {
    const auto path = write_temp_csv("cleanet_labelled.csv",
                                     "x,label,y\n"
                                     "1,0,10\n"
                                     "2,1,20\n"
                                     "3,0,30\n");
    const LoadedSeries loaded = load_csv(path, CsvSchema{"label"});
    REQUIRE(loaded.series.num_metrics() == 2);
    REQUIRE(loaded.series.num_timestamps() == 3);
    REQUIRE(loaded.labels.has_value());
    REQUIRE(loaded.labels->labels == std::vector<std::uint8_t>{0, 1, 0});
    REQUIRE(loaded.series.values(1, 2) == 30.0);
}

TEST_CASE("load_csv rejects non-finite and malformed cells") {
    const auto inf_path = write_temp_csv("cleanet_inf.csv", "a,b\n1,2\n3,inf\n");
    REQUIRE_THROWS_MATCHES(load_csv(inf_path), parse_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring(":3") &&
                               Catch::Matchers::ContainsSubstring("b")));

    const auto bad_path = write_temp_csv("cleanet_bad.csv", "a,b\n1,2\nx,4\n");
    REQUIRE_THROWS_MATCHES(load_csv(bad_path), parse_error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring(":3")));

    const auto ragged_path = write_temp_csv("cleanet_ragged.csv", "a,b\n1,2\n3\n");
    REQUIRE_THROWS_AS(load_csv(ragged_path), parse_error);
}

TEST_CASE("minmax_normalize scales, handles constants, clips at test time") {
    SeriesMatrix s;
    s.values = Matrix{{2, 4, 6}, {5, 5, 5}};
    s.metric_names = {"a", "b"};

    auto [norm, stats] = minmax_normalize(s);
    REQUIRE(norm.values(0, 0) == 0.0);
    REQUIRE(norm.values(0, 1) == 0.5);
    REQUIRE(norm.values(0, 2) == 1.0);
    // Constant metric maps to zero.
    REQUIRE(norm.values(1, 0) == 0.0);
    REQUIRE(norm.values(1, 2) == 0.0);
    REQUIRE(stats.min[0] == 2.0);
    REQUIRE(stats.max[0] == 6.0);

    SeriesMatrix test;
    test.values = Matrix{{8, 0, 4}, {5, 7, 5}};
    test.metric_names = s.metric_names;
    auto [tnorm, tstats] = minmax_normalize(test, stats);
    REQUIRE(tnorm.values(0, 0) == 1.0); // above train max -> clipped
    REQUIRE(tnorm.values(0, 1) == 0.0); // below train min -> clipped
    REQUIRE(tnorm.values(0, 2) == 0.5);
    REQUIRE(tstats.min == stats.min);
}

TEST_CASE("normalization with own stats is idempotent") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    SeriesMatrix s;
    s.values = Matrix(3, 40);
    for (double& v : s.values.data) v = dist(rng);
    s.metric_names = {"a", "b", "c"};

    auto [norm, stats] = minmax_normalize(s);
    auto [renorm, stats2] = minmax_normalize(norm);
    for (std::size_t i = 0; i < norm.values.size(); ++i)
        REQUIRE(renorm.values.data[i] == Catch::Approx(norm.values.data[i]).margin(1e-12));
}

TEST_CASE("make_windows counts and starts") {
    SeriesMatrix s;
    s.values = Matrix(2, 10);
    for (std::size_t t = 0; t < 10; ++t) {
        s.values(0, t) = static_cast<double>(t);
        s.values(1, t) = static_cast<double>(10 + t);
    }
    s.metric_names = {"a", "b"};

    SECTION("stride equal to window") {
        const WindowBatch b = make_windows(s, 5, 5);
        REQUIRE(b.size() == 2);
        REQUIRE(b.start_indices == std::vector<std::size_t>{0, 5});
        REQUIRE(b.windows[1](0, 0) == 5.0);
    }
    SECTION("single full-length window") {
        const WindowBatch b = make_windows(s, 10, 1);
        REQUIRE(b.size() == 1);
        REQUIRE(b.start_indices == std::vector<std::size_t>{0});
    }
    SECTION("window longer than series is a configuration error") {
        REQUIRE_THROWS_AS(make_windows(s, 11, 1), config_error);
    }
}

TEST_CASE("window length 100 over 100 timestamps yields one window") {
    SeriesMatrix s;
    s.values = Matrix(1, 100, 0.25);
    s.metric_names = {"a"};
    const WindowBatch b = make_windows(s, 100, 100);
    REQUIRE(b.size() == 1);
}

TEST_CASE("windows at stride w reassemble the series") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    SeriesMatrix s;
    s.values = Matrix(3, 60);
    for (double& v : s.values.data) v = dist(rng);
    s.metric_names = {"a", "b", "c"};

    const std::size_t w = 12;
    const WindowBatch b = make_windows(s, w, w);
    REQUIRE(b.size() == 5);
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t t = 0; t < w; ++t)
                REQUIRE(b.windows[i](m, t) == s.values(m, b.start_indices[i] + t));
}

TEST_CASE("split_train_val is chronological and proportional") {
    SeriesMatrix s;
    s.values = Matrix(1, 100);
    for (std::size_t t = 0; t < 100; ++t) s.values(0, t) = static_cast<double>(t);
    s.metric_names = {"a"};

    SECTION("10 windows split 8/2") {
        const WindowBatch b = make_windows(s, 10, 10);
        auto [train, val] = split_train_val(b, 0.8);
        REQUIRE(train.size() == 8);
        REQUIRE(val.size() == 2);
        REQUIRE(train.start_indices.back() < val.start_indices.front());
    }
    SECTION("5 windows split 4/1") {
        const WindowBatch b = make_windows(s, 20, 20);
        auto [train, val] = split_train_val(b, 0.8);
        REQUIRE(train.size() == 4);
        REQUIRE(val.size() == 1);
    }
    SECTION("single window cannot split") {
        const WindowBatch b = make_windows(s, 100, 100);
        REQUIRE_THROWS_AS(split_train_val(b, 0.8), config_error);
    }
    SECTION("start indices stay disjoint and ordered") {
        const WindowBatch b = make_windows(s, 10, 5);
        auto [train, val] = split_train_val(b, 0.6);
        for (std::size_t i = 1; i < train.start_indices.size(); ++i)
            REQUIRE(train.start_indices[i - 1] < train.start_indices[i]);
        for (std::size_t s2 : val.start_indices)
            REQUIRE(s2 > train.start_indices.back());
    }
}

TEST_CASE("series csv round trip is exact") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    SeriesMatrix s;
    s.values = Matrix(2, 25);
    for (double& v : s.values.data) v = dist(rng);
    s.metric_names = {"cpu", "mem"};
    LabelVector labels;
    labels.labels.assign(25, 0);
    labels.labels[7] = 1;

    std::ostringstream buffer;
    write_series_csv(s, &labels, buffer);
    const auto path = write_temp_csv("cleanet_roundtrip.csv", buffer.str());
    const LoadedSeries loaded = load_csv(path, CsvSchema{"label"});
    REQUIRE(loaded.series.values.data == s.values.data);
    REQUIRE(loaded.labels->labels == labels.labels);
}
