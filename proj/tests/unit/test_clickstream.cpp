#include "clickguard/clickstream.hpp"
#include "clickguard/config.hpp"
#include "clickguard/error.hpp"
#include "clickguard/matrix.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace clickguard;

namespace {

ClickEvent click(double t, std::string source, Label label = Label::Legit) {
    ClickEvent c;
    c.timestamp = t;
    c.source = std::move(source);
    c.ad_url = "https://ads.example.net/x";
    c.referrer_url = "https://pub.example.org/";
    c.user_agent = "agent, with comma";
    c.label = label;
    return c;
}

}  // namespace

TEST_CASE("bin_index boundaries") {
    TimeBinConfig cfg;  // one day of 300 s bins
    cfg.window_start = 1000.0;
    CHECK(bin_index(1000.0, cfg) == 0u);
    CHECK(bin_index(1150.0, cfg) == 0u);
    CHECK(bin_index(1300.0, cfg) == 1u);
    CHECK_FALSE(bin_index(1000.0 + 300.0 * 288, cfg).has_value());
    CHECK_FALSE(bin_index(999.0, cfg).has_value());
    CHECK(bin_index(1000.0 + 300.0 * 288 - 1e-6, cfg) == 287u);
}

TEST_CASE("for_days covers whole days") {
    const auto cfg = TimeBinConfig::for_days(7.0, 50.0);
    CHECK(cfg.num_bins == 2016);
    CHECK(cfg.window_start == 50.0);
    CHECK(cfg.window_end() == 50.0 + 7 * kSecondsPerDay);
    CHECK_THROWS_AS(TimeBinConfig::for_days(0.0).validate(), InvalidArgument);
}

TEST_CASE("traffic matrix counts clicks per source and bin") {
    TimeBinConfig cfg;
    SUBCASE("empty input") {
        const auto m = build_traffic_matrix({}, cfg);
        CHECK(m.num_sources() == 0);
        CHECK(m.discarded == 0);
    }
    SUBCASE("single click") {
        const std::vector<ClickEvent> clicks = {click(150, "A")};
        const auto m = build_traffic_matrix(clicks, cfg);
        CHECK(m.num_sources() == 1);
        CHECK(m.num_bins() == 288);
        CHECK(m.counts(0, 0) == 1.0);
    }
    SUBCASE("two sources, first-appearance order") {
        const std::vector<ClickEvent> clicks = {click(10, "A"), click(290, "A"), click(900, "B"),
                                                click(1550, "A"), click(-5, "B"), click(1e9, "C")};
        const auto m = build_traffic_matrix(clicks, cfg);
        // A source whose clicks all fall outside the window still gets a row.
        REQUIRE(m.num_sources() == 3);
        CHECK(m.sources == std::vector<std::string>{"A", "B", "C"});
        CHECK(squared_norm(m.counts) == 4 + 1 + 1);
        CHECK(m.counts(0, 0) == 2.0);
        CHECK(m.counts(0, 5) == 1.0);
        CHECK(m.counts(1, 3) == 1.0);
        CHECK(m.discarded == 2);
        CHECK(m.row_of("B") == 1u);
        CHECK_FALSE(m.row_of("D").has_value());
    }
}

TEST_CASE("traffic matrix totals and shuffle invariance") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> t(-3000.0, 90000.0);
    std::uniform_int_distribution<int> s(0, 6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ClickEvent> clicks;
        for (int k = 0; k < 300; ++k) clicks.push_back(click(t(rng), "s" + std::to_string(s(rng))));
        TimeBinConfig cfg;
        const auto a = build_traffic_matrix(clicks, cfg);
        double total = 0;
        for (double v : a.counts.values()) total += v;
        CHECK(total + static_cast<double>(a.discarded) == 300.0);

        std::shuffle(clicks.begin(), clicks.end(), rng);
        const auto b = build_traffic_matrix(clicks, cfg);
        std::vector<std::vector<double>> ra, rb;
        for (std::size_t i = 0; i < a.num_sources(); ++i)
            ra.emplace_back(a.counts.row(i).begin(), a.counts.row(i).end());
        for (std::size_t i = 0; i < b.num_sources(); ++i)
            rb.emplace_back(b.counts.row(i).begin(), b.counts.row(i).end());
        std::sort(ra.begin(), ra.end());
        std::sort(rb.begin(), rb.end());
        CHECK(ra == rb);
    }
}

TEST_CASE("interclick times") {
    CHECK(interclick_times(std::vector<double>{10}).empty());
    CHECK(interclick_times(std::vector<double>{}).empty());
    CHECK(interclick_times(std::vector<double>{10, 20, 25}) == std::vector<double>{10, 5});
    CHECK(interclick_times(std::vector<double>{5, 5}) == std::vector<double>{0});
    CHECK_THROWS_AS((void)interclick_times(std::vector<double>{5, 4}), InvalidArgument);
    const std::vector<ClickEvent> clicks = {click(1, "A"), click(4, "A")};
    CHECK(interclick_times(clicks) == std::vector<double>{3});
}

TEST_CASE("clickstream CSV round-trip keeps every field") {
    std::vector<ClickEvent> clicks = {click(0.1, "src-1"), click(1.0 / 3.0, "src \"2\"", Label::OrganicSpam),
                                      click(1e9 + 0.123456789, "s3", Label::Bait),
                                      click(42, "s4", Label::InorganicSpam), click(43, "s5", Label::Unknown)};
    std::stringstream io;
    write_clickstream(io, clicks);
    const auto r = read_clickstream(io);
    CHECK(r.errors.empty());
    CHECK(r.events == clicks);
}

TEST_CASE("clickstream ingest reports bad lines and keeps the rest") {
    std::stringstream empty("timestamp,source,ad_url,referrer_url,user_agent,label\n");
    CHECK(read_clickstream(empty).events.empty());

    std::stringstream in(
        "timestamp,source,ad_url,referrer_url,user_agent,label\n"
        "10,A,u,r,ua,legit\n"
        "11,B,u,r,ua,bogus\n"
        "abc,C,u,r,ua,legit\n"
        "12,D,u,r,ua,organic\n");
    const auto r = read_clickstream(in);
    REQUIRE(r.events.size() == 2);
    CHECK(r.events[1].source == "D");
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].line == 3);
    CHECK(r.errors[1].line == 4);

    std::stringstream no_header("10,A,u,r,ua,legit\n");
    CHECK_THROWS_AS((void)read_clickstream(no_header), DataError);
}

TEST_CASE("format_double is shortest round-trip text") {
    CHECK(format_double(300.0) == "300");
    CHECK(format_double(0.1) == "0.1");
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_double(third)) == third);
}

TEST_CASE("key=value config parsing") {
    std::stringstream in("# comment\nrank = 5\nname=abc\nlist=1, 2,3\nflag=true\n");
    const auto kv = KeyValueConfig::parse(in);
    CHECK(kv.get_uint("rank", 0) == 5);
    CHECK(kv.get_string("name", "") == "abc");
    CHECK(kv.get_doubles("list", {}) == std::vector<double>{1, 2, 3});
    CHECK(kv.get_bool("flag", false));
    CHECK(kv.get_double("missing", 2.5) == 2.5);
    CHECK_THROWS_AS(kv.require_known({"rank", "name"}), DataError);

    std::stringstream dup("a=1\na=2\n");
    CHECK_THROWS_AS((void)KeyValueConfig::parse(dup), DataError);
    std::stringstream bad("novalue\n");
    CHECK_THROWS_AS((void)KeyValueConfig::parse(bad), DataError);
}

TEST_CASE("matrix basics") {
    const Matrix a = {{1, 2}, {3, 4}};
    const Matrix b = {{0, 1}, {1, 0}};
    CHECK(multiply(a, b) == Matrix{{2, 1}, {4, 3}});
    CHECK(a.transposed() == Matrix{{1, 3}, {2, 4}});
    CHECK(squared_norm(a) == 30.0);
    CHECK_THROWS_AS((void)multiply(a, Matrix(3, 1)), DimensionMismatch);
    const auto csr = CsrMatrix::from_dense(Matrix{{0, 2, 0}, {0, 0, 0}, {1, 0, 3}});
    CHECK(csr.nonzeros() == 3);
    CHECK(csr.row_start == std::vector<std::size_t>{0, 1, 1, 3});
    CHECK(csr.col_index == std::vector<std::size_t>{1, 0, 2});
}
