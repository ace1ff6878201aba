#include "atlas/service.hpp"

#include <fstream>

#include "httplib.h"

namespace atlas::service {

namespace fs = std::filesystem;
using io::json;

namespace {

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("service", "unreadable_snapshot", "cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("service", "unreadable_snapshot", p.string() + ": " + e.what());
    }
}

Response error(int status, std::string_view code, std::string_view message) {
    return {status, io::dump({{"error", {{"code", code}, {"message", message}}}})};
}

Response ok(const json& j) { return {200, io::dump(j)}; }

const std::string* param(const Params& params, std::string_view key) {
    auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
}

int status_for(const Error& e) {
    if (e.code() == "unknown_country" || e.code() == "unknown_period") return 404;
    return 422;
}

}  // namespace

Service Service::open(const fs::path& directory) {
    Service s;
    s.manifest_ = read_json(directory / "manifest.json");
    s.digest_ = s.manifest_.at("snapshot_digest").get<std::string>();
    for (const auto& p : s.manifest_.at("periods")) {
        Period period;
        period.id = p.at("id").get<std::string>();
        if (!p.at("empty").get<bool>()) {
            const auto dir = directory / "periods" / period.id;
            period.scores = read_json(dir / "scores.json");
            period.pgi = read_json(dir / "pgi.json");
            period.space = read_json(dir / "productspace.json");
            period.portfolios = read_json(dir / "portfolios.json");
            period.table = io::pgi_from_json(period.pgi);
            std::vector<std::string> products;
            for (const auto& [code, v] : period.scores.at("product").items()) products.push_back(code);
            period.products = Registry(std::move(products));
        }
        s.periods_.push_back(std::move(period));
    }
    return s;
}

const Service::Period* Service::find(std::string_view id) const {
    for (const auto& p : periods_)
        if (p.id == id) return &p;
    return nullptr;
}

Response Service::get(std::string_view path, const Params& params) const {
    if (path == "/periods") {
        return ok({{"periods", manifest_.at("periods")}, {"snapshot_digest", digest_}});
    }

    const auto* period_id = param(params, "period");
    auto lookup = [&](const Period*& out) -> std::optional<Response> {
        if (!period_id) return error(400, "missing_parameter", "query parameter 'period' is required");
        out = find(*period_id);
        if (!out) return error(404, "unknown_period", "unknown period '" + *period_id + "'");
        if (out->scores.is_null()) return error(404, "empty_period", "period '" + *period_id + "' has no countries");
        return std::nullopt;
    };

    const Period* period = nullptr;
    if (path == "/rankings") {
        if (auto e = lookup(period)) return *e;
        const auto* metric = param(params, "metric");
        const std::string m = metric ? *metric : "eci";
        if (m != "eci" && m != "fitness" && m != "entropy" && m != "hhi")
            return error(400, "invalid_metric", "metric must be one of eci, fitness, entropy, hhi");
        std::vector<std::pair<std::string, double>> rows;
        for (const auto& [code, v] : period->scores.at("country").items()) {
            const auto& x = v.at(m);
            if (!x.is_null()) rows.emplace_back(code, x.get<double>());
        }
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        json out = json::array();
        for (std::size_t i = 0; i < rows.size(); ++i)
            out.push_back({{"rank", i + 1}, {"country", rows[i].first}, {m, rows[i].second}});
        return ok({{"period", period->id}, {"metric", m}, {"rankings", std::move(out)}, {"snapshot_digest", digest_}});
    }
    if (path == "/pgi") {
        if (auto e = lookup(period)) return *e;
        json out = {{"period", period->id}};
        out.update(period->pgi);
        out["snapshot_digest"] = digest_;
        return ok(out);
    }
    if (path == "/productspace") {
        if (auto e = lookup(period)) return *e;
        json out = {{"period", period->id}};
        out.update(period->space);
        out["snapshot_digest"] = digest_;
        return ok(out);
    }
    constexpr std::string_view country_prefix = "/country/";
    if (path.substr(0, country_prefix.size()) == country_prefix) {
        if (auto e = lookup(period)) return *e;
        const std::string code(path.substr(country_prefix.size()));
        const auto& countries = period->portfolios.at("countries");
        if (!countries.contains(code))
            return error(404, "unknown_country", "country '" + code + "' is not in period '" + period->id + "'");
        const auto& pf = countries.at(code);
        return ok({{"country", code},
                   {"period", period->id},
                   {"scores", period->scores.at("country").at(code)},
                   {"expected_gini", pf.at("expected_gini")},
                   {"products", pf.at("products")},
                   {"snapshot_digest", digest_}});
    }
    return error(404, "not_found", "no route for " + std::string(path));
}

Response Service::whatif(std::string_view body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception& e) {
        return error(400, "invalid_json", e.what());
    }
    if (!req.is_object() || !req.contains("country") || !req.contains("period") || !req["country"].is_string() ||
        !req["period"].is_string())
        return error(400, "invalid_request", "body needs string fields 'country' and 'period'");

    inequality::WhatIfRequest request;
    request.country = req["country"].get<std::string>();
    try {
        for (const char* key : {"add", "remove"}) {
            if (!req.contains(key)) continue;
            auto& dst = std::string_view(key) == "add" ? request.add : request.remove;
            dst = req[key].get<std::vector<std::string>>();
        }
        if (req.contains("add_weights")) request.add_weights = req["add_weights"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        return error(400, "invalid_request", e.what());
    }

    const auto period_id = req["period"].get<std::string>();
    const auto* period = find(period_id);
    if (!period) return error(404, "unknown_period", "unknown period '" + period_id + "'");
    if (period->scores.is_null()) return error(404, "empty_period", "period '" + period_id + "' has no countries");
    const auto& countries = period->portfolios.at("countries");
    if (!countries.contains(request.country))
        return error(404, "unknown_country", "country '" + request.country + "' is not in period '" + period_id + "'");

    std::vector<inequality::Holding> basket;
    for (const auto& h : countries.at(request.country).at("products"))
        basket.push_back({h.at("product").get<std::string>(), h.at("share").get<double>(), h.at("advantage").get<bool>()});

    try {
        auto result = inequality::whatif(request, basket, period->table, period->products);
        json out = io::whatif(result);
        out["period"] = period_id;
        out["snapshot_digest"] = digest_;
        return ok(out);
    } catch (const Error& e) {
        return error(status_for(e), e.code(), e.what());
    }
}

Response Service::handle(std::string_view method, std::string_view path, const Params& params,
                         std::string_view body) const {
    try {
        if (method == "GET") return get(path, params);
        if (method == "POST" && path == "/whatif") return whatif(body);
        return error(405, "method_not_allowed", std::string(method) + " " + std::string(path));
    } catch (const Error& e) {
        return error(500, e.code(), e.what());
    } catch (const std::exception& e) {
        return error(500, "internal", e.what());
    }
}

HttpServer::HttpServer(const Service& service) : server_(std::make_unique<httplib::Server>()) {
    server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
    auto adapt = [&service](const httplib::Request& req, httplib::Response& res) {
        Params params;
        for (const auto& [k, v] : req.params) params.emplace(k, v);
        const auto r = service.handle(req.method, req.path, params, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server_->Get(".*", adapt);
    server_->Post(".*", adapt);
    server_->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("service", "listen_failed", "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() {
    if (!server_->listen_after_bind()) throw Error("service", "listen_failed", "server stopped with an error");
}

void HttpServer::stop() { server_->stop(); }

void serve(const Service& service, const std::string& host, int port) {
    HttpServer server(service);
    server.bind(host, port);
    server.listen();
}

}  // namespace atlas::service
