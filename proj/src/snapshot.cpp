#include "atlas/snapshot.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace atlas::service {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("service", "digest", "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("service", "unreadable_input", "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void check_period_id(const std::string& id) {
    if (id.empty() || id == "." || id == "..")
        throw Error("service", "invalid_period", "period id '" + id + "' is not a valid directory name");
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
            throw Error("service", "invalid_period", "period id '" + id + "' is not a valid directory name");
}

}  // namespace

BuildConfig parse_config(std::string_view text, const fs::path& base_dir) {
    BuildConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.trade = resolve(base_dir, j.at("trade").get<std::string>());
        if (j.contains("schema")) {
            const auto& s = j["schema"];
            c.schema.year = s.value("year", c.schema.year);
            c.schema.origin = s.value("origin", c.schema.origin);
            c.schema.product = s.value("product", c.schema.product);
            c.schema.value = s.value("value", c.schema.value);
            c.schema.min_year = s.value("min_year", c.schema.min_year);
            c.schema.max_year = s.value("max_year", c.schema.max_year);
        }
        for (const auto& p : j.value("panels", std::vector<std::string>{}))
            c.panels.push_back(resolve(base_dir, p));
        if (j.contains("periods")) {
            c.periods = ingest::parse_periods_json(j["periods"].dump());
        } else if (j.contains("periods_file")) {
            c.periods = ingest::parse_periods_json(read_file(resolve(base_dir, j["periods_file"].get<std::string>())));
        }
        if (j.contains("filter")) {
            c.filter.min_population = j["filter"].value("min_population", c.filter.min_population);
            c.filter.min_exports = j["filter"].value("min_exports", c.filter.min_exports);
        }
        c.gini_dataset = j.value("gini_dataset", c.gini_dataset);
        c.backbone_threshold = j.value("backbone_threshold", c.backbone_threshold);
        c.pooled_proximity = j.value("pooled_proximity", c.pooled_proximity);
        c.output = resolve(base_dir, j.value("output", std::string("snapshot")));
    } catch (const nlohmann::json::exception& e) {
        throw Error("service", "invalid_config", std::string("config: ") + e.what());
    }
    return c;
}

BuildConfig load_config(const fs::path& file) {
    return parse_config(read_file(file), file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

namespace {

template <class F>
auto in_period(const std::string& period, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        std::string what = e.what();
        const auto prefix = e.module() + ": ";
        if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
        throw Error(e.module(), e.code(), "period " + period + ": " + what);
    }
}

std::optional<double> opt(const std::optional<double>& v) { return v; }

void add_panel_rows(econometrics::PanelDataset& panel, const PeriodArtifacts& a,
                    const ingest::PeriodFrame& frame, const std::string& gini_dataset) {
    for (std::size_t i = 0; i < a.scores.countries.size(); ++i) {
        const auto& code = a.scores.countries[i];
        std::map<std::string, double> v;
        auto put = [&](const std::string& name, const std::optional<double>& x) {
            v[name] = x ? *x : std::numeric_limits<double>::quiet_NaN();
        };
        put("eci", a.scores.eci[i]);
        put("fitness", a.scores.fitness[i]);
        put("entropy", a.scores.entropy[i]);
        put("hhi", a.scores.hhi[i]);
        put("expected_gini", inequality::expected_gini(code, a.advantage, a.shares, a.pgi));
        const auto* rec = frame.panel_for(code);
        std::optional<double> gini, gdp, school, pop;
        std::array<std::optional<double>, ingest::kGovernanceCount> gov{};
        if (rec) {
            if (auto it = rec->gini.find(gini_dataset); it != rec->gini.end()) gini = it->second;
            for (const auto& [tag, g] : rec->gini) put("gini_" + tag, g);
            gdp = rec->gdp_ppp_pc;
            school = rec->schooling;
            pop = rec->population;
            gov = rec->governance;
        }
        put("gini", gini);
        put("gdp_ppp_pc", gdp);
        put("ln_gdp", gdp && *gdp > 0 ? opt(std::log(*gdp)) : std::nullopt);
        put("ln_gdp_sq", gdp && *gdp > 0 ? opt(std::log(*gdp) * std::log(*gdp)) : std::nullopt);
        put("schooling", school);
        put("population", pop);
        put("ln_pop", pop ? opt(std::log(*pop)) : std::nullopt);
        for (std::size_t g = 0; g < ingest::kGovernanceCount; ++g) put(ingest::kGovernanceNames[g], gov[g]);
        panel.add_row(code, a.period.id, v);
    }
}

}  // namespace

Snapshot compute_snapshot(const BuildConfig& config) {
    Snapshot snap;
    snap.backbone_threshold = config.backbone_threshold;
    snap.gini_dataset = config.gini_dataset;
    for (const auto& p : config.periods) check_period_id(p.id);

    const auto trade_text = read_file(config.trade);
    snap.input_digests[config.trade.filename().string()] = sha256_hex(trade_text);
    std::istringstream trade_in(trade_text);
    auto trade = ingest::parse_trade_table(trade_in, config.schema);
    snap.rejections = trade.rejections;
    for (auto& r : snap.rejections) r.source = config.trade.stem().string();

    std::vector<ingest::NamedSource> sources;
    for (const auto& p : config.panels) {
        auto text = read_file(p);
        snap.input_digests[p.filename().string()] = sha256_hex(text);
        sources.push_back({p.stem().string(), std::move(text)});
    }
    auto panel = ingest::parse_panel_tables(sources);
    snap.rejections.insert(snap.rejections.end(), panel.rejections.begin(), panel.rejections.end());

    const auto frame = ingest::build_frame(trade.flows, panel.records, config.periods, config.filter);

    for (const auto& pf : frame.periods) {
        PeriodArtifacts a;
        a.period = pf.period;
        a.excluded = pf.excluded;
        a.empty = pf.empty;
        if (!pf.empty) {
            in_period(pf.period.id, [&] {
                a.exports = matrix::compact(pf.exports, &a.pruned);
                a.rca = matrix::rca(a.exports);
                a.advantage = matrix::advantage(a.rca);
                a.shares = matrix::shares(a.exports);
                DropReport pruned;
                matrix::prune(a.advantage, &pruned);
                a.pruned.countries.insert(a.pruned.countries.end(), pruned.countries.begin(), pruned.countries.end());
                a.pruned.products.insert(a.pruned.products.end(), pruned.products.begin(), pruned.products.end());
                a.scores = complexity::compute_scores(pf.period.id, a.advantage, a.shares);
                inequality::GiniMap gini;
                for (const auto& rec : pf.panel)
                    if (auto it = rec.gini.find(config.gini_dataset); it != rec.gini.end()) gini[rec.country] = it->second;
                a.pgi = inequality::pgi_table(a.advantage, a.shares, gini);
            });
        }
        snap.periods.push_back(std::move(a));
    }

    std::vector<matrix::AdvantageMatrix> pooled;
    if (config.pooled_proximity)
        for (const auto& a : snap.periods)
            if (!a.empty) pooled.push_back(a.advantage);
    const auto pooled_phi = pooled.empty() ? productspace::ProximityMatrix{} : productspace::pooled_proximity(pooled);

    for (std::size_t k = 0; k < snap.periods.size(); ++k) {
        auto& a = snap.periods[k];
        if (a.empty) continue;
        in_period(a.period.id, [&] {
            const auto phi = config.pooled_proximity ? pooled_phi : productspace::proximity(a.advantage);
            a.space = productspace::backbone(phi, config.backbone_threshold);
            std::map<std::string, double, std::less<>> pgi;
            std::map<std::string, double, std::less<>> pci;
            for (const auto& r : a.pgi.rows) pgi[r.product] = r.pgi;
            for (std::size_t j = 0; j < a.scores.products.size(); ++j)
                if (a.scores.pci[j]) pci[a.scores.products[j]] = *a.scores.pci[j];
            productspace::attach_overlays(a.space, productspace::world_trade(a.exports), pgi, pci);
        });
        add_panel_rows(snap.panel, a, frame.periods[k], config.gini_dataset);
    }
    return snap;
}

std::map<std::string, std::string> render_snapshot(const Snapshot& snap) {
    using io::json;
    std::map<std::string, std::string> files;

    json periods = json::array();
    json exclusions = json::object();
    for (const auto& a : snap.periods) {
        periods.push_back({{"id", a.period.id}, {"start", a.period.start_year}, {"end", a.period.end_year},
                           {"empty", a.empty}});
        json ex;
        json filtered = json::array();
        for (const auto& e : a.excluded) filtered.push_back({{"country", e.country}, {"reason", e.reason}});
        ex["filtered"] = std::move(filtered);
        ex["pruned_countries"] = a.pruned.countries;
        ex["pruned_products"] = a.pruned.products;
        ex["eci_missing"] = a.scores.eci_missing;
        ex["pgi_excluded"] = a.pgi.excluded;
        exclusions[a.period.id] = std::move(ex);
        if (a.empty) continue;

        const std::string dir = "periods/" + a.period.id + "/";
        files[dir + "scores.json"] = io::dump(io::scores(a.scores));
        files[dir + "pgi.json"] = io::dump(io::pgi(a.pgi));
        files[dir + "pgi.csv"] = io::pgi_csv(a.pgi);
        files[dir + "productspace.json"] = io::dump(io::graph(a.space));
        files[dir + "productspace_edges.csv"] = io::graph_edges_csv(a.space);
        files[dir + "advantage.json"] = io::dump(io::triplet(a.advantage));
        files[dir + "rca.json"] = io::dump(io::triplet(a.rca.countries, a.rca.products, a.rca.values));

        json countries = json::object();
        for (const auto& code : a.shares.countries) {
            json items = json::array();
            for (const auto& h : inequality::portfolio(code, a.advantage, a.shares)) {
                const auto* row = a.pgi.find(h.product);
                items.push_back({{"product", h.product},
                                 {"share", io::number(h.share)},
                                 {"advantage", h.advantage},
                                 {"pgi", row ? io::number(row->pgi) : json(nullptr)}});
            }
            countries[code] = {{"expected_gini", io::number(inequality::expected_gini(code, a.advantage, a.shares, a.pgi))},
                               {"products", std::move(items)}};
        }
        files[dir + "portfolios.json"] = io::dump({{"period", a.period.id}, {"countries", std::move(countries)}});
    }

    std::ostringstream panel;
    econometrics::write_panel_csv(panel, snap.panel);
    files["panel.csv"] = panel.str();

    json artifacts = json::object();
    std::string digest_input;
    for (const auto& [name, sha] : snap.input_digests) digest_input += "input:" + name + ":" + sha + "\n";
    for (const auto& [path, content] : files) {
        const auto sha = sha256_hex(content);
        artifacts[path] = sha;
        digest_input += path + ":" + sha + "\n";
    }

    json rejections = json::array();
    for (const auto& r : snap.rejections)
        rejections.push_back({{"source", r.source}, {"row", r.row}, {"reason", r.reason}});

    json manifest;
    manifest["format"] = 1;
    manifest["periods"] = std::move(periods);
    manifest["gini_dataset"] = snap.gini_dataset;
    manifest["backbone_threshold"] = io::number(snap.backbone_threshold);
    manifest["inputs"] = snap.input_digests;
    manifest["rejections"] = std::move(rejections);
    manifest["exclusions"] = std::move(exclusions);
    manifest["artifacts"] = std::move(artifacts);
    manifest["snapshot_digest"] = sha256_hex(digest_input);
    files["manifest.json"] = io::dump(manifest);
    return files;
}

BuildSummary build_snapshot(const BuildConfig& config) {
    const auto snap = compute_snapshot(config);
    const auto files = render_snapshot(snap);

    BuildSummary summary;
    summary.directory = config.output;
    for (const auto& [path, content] : files) {
        const auto target = config.output / path;
        fs::create_directories(target.parent_path());
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("service", "unwritable_output", "cannot write " + target.string());
        out << content;
        summary.files.push_back(path);
    }
    summary.digest = io::json::parse(files.at("manifest.json"))["snapshot_digest"].get<std::string>();

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::ofstream info(config.output / "build_info.json", std::ios::trunc);
    info << io::dump({{"built_at", stamp}, {"snapshot_digest", summary.digest}});
    return summary;
}

}  // namespace atlas::service
