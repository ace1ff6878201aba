#include <array>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "doctest.h"

#include "atlas/service.hpp"
#include "atlas/snapshot.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"

using namespace atlas;
using namespace atlas::service;
namespace fs = std::filesystem;
using json = io::json;

namespace {

const fs::path kFixture = ATLAS_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(ATLAS_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

BuildConfig fixture_config(const fs::path& out) {
    auto c = load_config(kFixture / "config.json");
    c.output = out;
    return c;
}

/// Copies the fixture inputs without any row mentioning `country`.
BuildConfig config_without(const std::string& country, const fs::path& dir) {
    for (const char* name : {"trade.csv", "ehii.csv", "wdi.csv", "wgi.csv"}) {
        std::ifstream in(kFixture / name);
        std::ofstream out(dir / name);
        std::string line;
        while (std::getline(in, line))
            if (line.find("," + country + ",") == std::string::npos && line.rfind(country + ",", 0) != 0)
                out << line << '\n';
    }
    auto c = parse_config(slurp(kFixture / "config.json"), dir);
    c.output = dir / "snapshot";
    return c;
}

/// Files whose contents differ between two rendered snapshots.
std::set<std::string> changed(const std::map<std::string, std::string>& a,
                              const std::map<std::string, std::string>& b) {
    std::set<std::string> out;
    for (const auto& [k, v] : a)
        if (!b.contains(k) || b.at(k) != v) out.insert(k);
    for (const auto& [k, v] : b)
        if (!a.contains(k)) out.insert(k);
    return out;
}

struct Built {
    fs::path dir;
    std::string digest;
};

const Built& fixture_snapshot() {
    static const Built built = [] {
        const auto dir = scratch("service_snapshot");
        const auto s = build_snapshot(fixture_config(dir));
        return Built{dir, s.digest};
    }();
    return built;
}

json body(const Response& r) { return json::parse(r.body); }

std::string error_code(const Response& r) { return body(r)["error"]["code"].get<std::string>(); }

std::string run(const std::string& command) {
    std::string out;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    pclose(pipe);
    return out;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config errors name the problem") {
    CHECK_THROWS_AS(parse_config("{", "."), Error);
    CHECK_THROWS_AS(parse_config("{}", "."), Error);
    try {
        parse_config(R"({"trade": 5})", ".");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "invalid_config");
    }
    const auto c = parse_config(R"({"trade": "t.csv", "output": "out"})", "/data");
    CHECK(c.trade == fs::path("/data/t.csv"));
    CHECK(c.periods.size() == ingest::default_periods().size());
}

TEST_CASE("snapshot rebuilds are byte identical") {
    const auto a = render_snapshot(compute_snapshot(fixture_config("unused")));
    const auto b = render_snapshot(compute_snapshot(fixture_config("unused")));
    CHECK(a == b);

    const auto& built = fixture_snapshot();
    const auto dir2 = scratch("service_snapshot_again");
    const auto again = build_snapshot(fixture_config(dir2));
    CHECK(again.digest == built.digest);
    for (const auto& [name, content] : a) CHECK(slurp(built.dir / name) == content);
    CHECK(fs::exists(built.dir / "build_info.json"));
}

TEST_CASE("removing a filtered country only touches files that mention it") {
    const auto base = render_snapshot(compute_snapshot(fixture_config("unused")));
    const auto dir = scratch("without_isl");
    const auto cut = render_snapshot(compute_snapshot(config_without("ISL", dir)));
    const auto diff = changed(base, cut);
    CHECK(diff.contains("manifest.json"));
    for (const auto& name : diff) {
        INFO(name);
        CHECK(base.at(name).find("ISL") != std::string::npos);
    }
    for (const auto& [name, content] : base)
        if (name.starts_with("periods/")) CHECK(cut.at(name) == content);
}

TEST_CASE("removing a scored country only touches files that mention it") {
    const auto base = render_snapshot(compute_snapshot(fixture_config("unused")));
    const auto dir = scratch("without_nor");
    const auto cut = render_snapshot(compute_snapshot(config_without("NOR", dir)));
    const auto diff = changed(base, cut);
    CHECK_FALSE(diff.empty());
    for (const auto& name : diff) {
        INFO(name);
        // The manifest indexes every artifact digest, so it changes with any of them.
        if (name == "manifest.json") continue;
        // Product-space files aggregate co-export counts over the period's advantage rows.
        std::string source = name;
        if (name.ends_with("/productspace.json") || name.ends_with("/productspace_edges.csv"))
            source = name.substr(0, name.rfind('/')) + "/advantage.json";
        CHECK(base.at(source).find("NOR") != std::string::npos);
    }
}

TEST_CASE("service endpoints") {
    const auto& built = fixture_snapshot();
    const auto svc = Service::open(built.dir);
    CHECK(svc.digest() == built.digest);

    SUBCASE("periods") {
        const auto r = svc.get("/periods", {});
        CHECK(r.status == 200);
        const auto j = body(r);
        CHECK(j["periods"].size() == 2);
        CHECK(j["snapshot_digest"] == built.digest);
    }
    SUBCASE("rankings are sorted with rank, country and metric") {
        for (const char* metric : {"eci", "fitness", "entropy", "hhi"}) {
            const auto r = svc.get("/rankings", {{"period", "1996-2001"}, {"metric", metric}});
            REQUIRE(r.status == 200);
            const auto rows = body(r)["rankings"];
            CHECK(rows.size() == 12);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                CHECK(rows[i]["rank"] == i + 1);
                CHECK(rows[i].size() == 3);
                CHECK(rows[i].contains("country"));
                if (i > 0) {
                    const double prev = rows[i - 1][metric], cur = rows[i][metric];
                    CHECK(prev >= cur);
                    if (prev == cur) CHECK(rows[i - 1]["country"] < rows[i]["country"]);
                }
            }
        }
        const auto dflt = body(svc.get("/rankings", {{"period", "1996-2001"}}));
        CHECK(dflt["metric"] == "eci");
    }
    SUBCASE("pgi and product space") {
        const auto p = body(svc.get("/pgi", {{"period", "2002-2008"}}));
        CHECK(p["products"].size() == 20);
        const auto g = body(svc.get("/productspace", {{"period", "2002-2008"}}));
        CHECK(g["nodes"].size() == 20);
        CHECK(g["links"].size() >= 19);
    }
    SUBCASE("country") {
        const auto r = svc.get("/country/USA", {{"period", "1996-2001"}});
        REQUIRE(r.status == 200);
        const auto j = body(r);
        CHECK(j["country"] == "USA");
        CHECK(j["scores"].contains("eci"));
        CHECK(j["expected_gini"].is_number());
        CHECK_FALSE(j["products"].empty());
    }
    SUBCASE("errors") {
        const auto filtered = svc.get("/country/ISL", {{"period", "1996-2001"}});
        CHECK(filtered.status == 404);
        CHECK(error_code(filtered) == "unknown_country");
        const auto period = svc.get("/pgi", {{"period", "1990-1995"}});
        CHECK(period.status == 404);
        CHECK(error_code(period) == "unknown_period");
        CHECK(error_code(svc.get("/rankings", {})) == "missing_parameter");
        const auto metric = svc.get("/rankings", {{"period", "1996-2001"}, {"metric", "gdp"}});
        CHECK(metric.status == 400);
        CHECK(error_code(metric) == "invalid_metric");
        CHECK(svc.get("/nope", {}).status == 404);
        CHECK(svc.handle("DELETE", "/pgi", {}, "").status == 405);
    }
}

TEST_CASE("what-if endpoint") {
    const auto svc = Service::open(fixture_snapshot().dir);
    const auto pf = body(svc.get("/country/USA", {{"period", "1996-2001"}}));
    std::set<std::string> held;
    for (const auto& h : pf["products"])
        if (h["advantage"].get<bool>()) held.insert(h["product"].get<std::string>());
    std::string absent;
    const auto table = body(svc.get("/pgi", {{"period", "1996-2001"}}));
    for (const auto& row : table["products"])
        if (!held.contains(row["product"].get<std::string>())) {
            absent = row["product"].get<std::string>();
            break;
        }
    REQUIRE_FALSE(absent.empty());

    SUBCASE("empty edits give zero delta") {
        const auto r = svc.whatif(R"({"country":"USA","period":"1996-2001"})");
        REQUIRE(r.status == 200);
        const auto j = body(r);
        CHECK(j["delta"] == 0.0);
        CHECK(j["baseline"] == pf["expected_gini"]);
    }
    SUBCASE("adding a product moves expected Gini") {
        json req = {{"country", "USA"}, {"period", "1996-2001"}, {"add", {absent}}};
        const auto r = svc.whatif(req.dump());
        REQUIRE(r.status == 200);
        const auto j = body(r);
        CHECK(j["edits"].size() == 1);
        CHECK(j["scenario"].get<double>() - j["baseline"].get<double>() ==
              doctest::Approx(j["delta"].get<double>()).epsilon(1e-9));
    }
    SUBCASE("structured validation errors") {
        const auto unknown = svc.whatif(R"({"country":"USA","period":"1996-2001","add":["9999"]})");
        CHECK(unknown.status == 422);
        CHECK(error_code(unknown) == "unknown_product");
        CHECK(error_code(svc.whatif("{")) == "invalid_json");
        CHECK(error_code(svc.whatif(R"({"country":"USA"})")) == "invalid_request");
        CHECK(error_code(svc.whatif(R"({"country":"USA","period":"1996-2001","add":3})")) == "invalid_request");
        CHECK(error_code(svc.whatif(R"({"country":"ISL","period":"1996-2001"})")) == "unknown_country");
        const auto held_product = *held.begin();
        json dup = {{"country", "USA"}, {"period", "1996-2001"}, {"add", {held_product}}};
        CHECK(error_code(svc.whatif(dup.dump())) == "already_in_basket");
    }
    SUBCASE("concurrent identical requests agree") {
        json req = {{"country", "USA"}, {"period", "1996-2001"}, {"add", {absent}}, {"remove", {*held.begin()}}};
        const auto text = req.dump();
        const auto expected = svc.whatif(text).body;
        std::vector<std::future<std::string>> jobs;
        for (int t = 0; t < 16; ++t)
            jobs.push_back(std::async(std::launch::async, [&] {
                std::string last;
                for (int k = 0; k < 20; ++k) {
                    const auto a = svc.whatif(text).body;
                    const auto b = svc.get("/rankings", {{"period", "2002-2008"}}).body;
                    last = a + b;
                }
                return last;
            }));
        const auto rankings = svc.get("/rankings", {{"period", "2002-2008"}}).body;
        for (auto& j : jobs) CHECK(j.get() == expected + rankings);
    }
}

TEST_CASE("HTTP matches the CLI byte for byte") {
    const auto& built = fixture_snapshot();
    const auto svc = Service::open(built.dir);
    HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread loop([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    const std::string cli = std::string(ATLAS_CLI_PATH) + " ";
    const std::string snap = " -s '" + built.dir.string() + "'";

    const auto rank = client.Get("/rankings?period=1996-2001&metric=fitness");
    REQUIRE(rank);
    CHECK(rank->status == 200);
    CHECK(rank->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(rank->get_header_value("Content-Type") == "application/json");
    CHECK(rank->body == run(cli + "rank" + snap + " -p 1996-2001 -m fitness"));

    const auto pgi = client.Get("/pgi?period=2002-2008");
    REQUIRE(pgi);
    CHECK(pgi->body == run(cli + "pgi" + snap + " -p 2002-2008"));

    const auto country = client.Get("/country/KOR?period=2002-2008");
    REQUIRE(country);
    CHECK(country->body == run(cli + "country KOR" + snap + " -p 2002-2008"));

    const auto periods = client.Get("/periods");
    REQUIRE(periods);
    CHECK(periods->body == run(cli + "periods" + snap));

    const auto space = client.Get("/productspace?period=1996-2001");
    REQUIRE(space);
    CHECK(space->body == run(cli + "productspace" + snap + " -p 1996-2001"));

    const auto whatif = client.Post("/whatif", R"({"country":"KOR","period":"2002-2008"})", "application/json");
    REQUIRE(whatif);
    CHECK(whatif->status == 200);
    CHECK(whatif->body == run(cli + "whatif KOR" + snap + " -p 2002-2008"));

    const auto missing = client.Get("/country/ISL?period=2002-2008");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["error"]["code"] == "unknown_country");

    const auto preflight = client.Options("/whatif");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);
    CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    server.stop();
    loop.join();
}
