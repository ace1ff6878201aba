#include "atlas/ingest.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace atlas::ingest {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<int> parse_year(std::string_view text) {
    text = trim(text);
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

std::size_t require_column(const std::vector<std::string>& header, std::string_view name,
                           std::string_view source) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == name) return i;
    throw Error("ingest", "missing_column",
                "missing column '" + std::string(name) + "' in " +
                    (source.empty() ? std::string("trade table") : std::string(source)));
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

TradeTable parse_trade_table(std::istream& source, const TradeSchema& schema) {
    std::string line;
    if (!read_line(source, line))
        throw Error("ingest", "missing_header", "trade table has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    const std::size_t iy = require_column(header, schema.year, "");
    const std::size_t io = require_column(header, schema.origin, "");
    const std::size_t ip = require_column(header, schema.product, "");
    const std::size_t iv = require_column(header, schema.value, "");
    const std::size_t width = std::max({iy, io, ip, iv}) + 1;

    TradeTable out;
    std::size_t row = 0;
    while (read_line(source, line)) {
        if (is_blank(line)) continue;
        ++row;
        const auto cells = split_csv_line(line);
        auto reject = [&](std::string reason) {
            out.rejections.push_back({"", row, std::move(reason)});
        };
        if (cells.size() < width) {
            reject("too few fields");
            continue;
        }
        const auto year = parse_year(cells[iy]);
        if (!year) {
            reject("malformed year");
            continue;
        }
        if (*year < schema.min_year || *year > schema.max_year) {
            reject("year out of range");
            continue;
        }
        const auto origin = trim(cells[io]);
        if (origin.empty()) {
            reject("empty origin");
            continue;
        }
        const auto product = trim(cells[ip]);
        if (product.size() != 4) {
            reject("product code must be 4 characters");
            continue;
        }
        const auto value = parse_number(cells[iv]);
        if (!value) {
            reject("malformed number");
            continue;
        }
        if (*value < 0.0) {
            reject("negative value");
            continue;
        }
        out.flows.push_back({*year, std::string(origin), std::string(product), *value});
    }
    return out;
}

namespace {

enum class Var { gini, gdp, schooling, population, governance };

struct ColumnRole {
    Var var;
    std::size_t governance_index = 0;
    std::size_t column = 0;
};

std::optional<ColumnRole> role_of(std::string_view name) {
    if (name == "gini") return ColumnRole{Var::gini};
    if (name == "gdp_ppp_pc") return ColumnRole{Var::gdp};
    if (name == "schooling") return ColumnRole{Var::schooling};
    if (name == "population") return ColumnRole{Var::population};
    for (std::size_t g = 0; g < kGovernanceCount; ++g)
        if (name == kGovernanceNames[g]) return ColumnRole{Var::governance, g};
    return std::nullopt;
}

std::string var_name(const ColumnRole& r, std::string_view tag) {
    switch (r.var) {
        case Var::gini: return "gini[" + std::string(tag) + "]";
        case Var::gdp: return "gdp_ppp_pc";
        case Var::schooling: return "schooling";
        case Var::population: return "population";
        case Var::governance: return kGovernanceNames[r.governance_index];
    }
    return {};
}

void assign(std::optional<double>& slot, double v, const std::string& what,
            const std::string& country, int year) {
    if (slot && *slot != v) {
        std::ostringstream msg;
        msg << "conflicting values for (" << country << ", " << year << ", " << what
            << "): " << *slot << " vs " << v;
        throw Error("ingest", "conflict", msg.str());
    }
    slot = v;
}

}  // namespace

PanelTables parse_panel_tables(std::span<const NamedSource> sources) {
    std::map<std::pair<std::string, int>, CountryPanelRecord> merged;
    PanelTables out;

    for (const auto& src : sources) {
        std::istringstream in(src.text);
        std::string line;
        if (!read_line(in, line))
            throw Error("ingest", "missing_header", "panel table '" + src.name + "' is empty");
        if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        const auto header = split_csv_line(line);
        const std::size_t ic = require_column(header, "country", src.name);
        const std::size_t iy = require_column(header, "year", src.name);
        std::vector<ColumnRole> roles;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i == ic || i == iy) continue;
            auto name = trim(header[i]);
            auto role = role_of(name);
            if (!role)
                throw Error("ingest", "unknown_column",
                            "unknown panel variable '" + std::string(name) + "' in " + src.name);
            role->column = i;
            roles.push_back(*role);
        }

        // First pass: read raw rows so the Gini scale can be detected per file.
        struct Raw {
            std::size_t row;
            std::string country;
            int year;
            std::vector<std::optional<double>> values;
        };
        std::vector<Raw> rows;
        double gini_max = 0.0;
        std::size_t row = 0;
        while (read_line(in, line)) {
            if (is_blank(line)) continue;
            ++row;
            const auto cells = split_csv_line(line);
            auto reject = [&](std::string reason) {
                out.rejections.push_back({src.name, row, std::move(reason)});
            };
            if (cells.size() < header.size()) {
                reject("too few fields");
                continue;
            }
            auto country = trim(cells[ic]);
            auto year = parse_year(cells[iy]);
            if (country.empty()) {
                reject("empty country");
                continue;
            }
            if (!year) {
                reject("malformed year");
                continue;
            }
            Raw raw{row, std::string(country), *year, {}};
            bool ok = true;
            for (const auto& r : roles) {
                auto cell = trim(cells[r.column]);
                if (cell.empty() || cell == "NA" || cell == "..") {
                    raw.values.emplace_back();
                    continue;
                }
                auto v = parse_number(cell);
                if (!v) {
                    reject("malformed number in " + std::string(trim(header[r.column])));
                    ok = false;
                    break;
                }
                if (r.var == Var::gini) gini_max = std::max(gini_max, *v);
                raw.values.push_back(v);
            }
            if (ok) rows.push_back(std::move(raw));
        }

        const double gini_scale = gini_max > 1.5 ? 0.01 : 1.0;
        for (auto& raw : rows) {
            bool ok = true;
            for (std::size_t k = 0; k < roles.size() && ok; ++k) {
                if (!raw.values[k]) continue;
                double& v = *raw.values[k];
                auto reject = [&](std::string reason) {
                    out.rejections.push_back({src.name, raw.row, std::move(reason)});
                    ok = false;
                };
                switch (roles[k].var) {
                    case Var::gini:
                        v *= gini_scale;
                        if (v < 0.0 || v > 1.0) reject("gini outside [0,1]");
                        break;
                    case Var::population:
                        if (v <= 0.0) reject("population must be positive");
                        break;
                    case Var::governance:
                        if (v < -3.0 || v > 3.0) reject("governance score outside [-3,3]");
                        break;
                    default: break;
                }
            }
            if (!ok) continue;
            auto& rec = merged[{raw.country, raw.year}];
            rec.country = raw.country;
            rec.year = raw.year;
            for (std::size_t k = 0; k < roles.size(); ++k) {
                if (!raw.values[k]) continue;
                const double v = *raw.values[k];
                const auto& r = roles[k];
                const auto what = var_name(r, src.name);
                switch (r.var) {
                    case Var::gini: {
                        std::optional<double> slot;
                        if (auto it = rec.gini.find(src.name); it != rec.gini.end())
                            slot = it->second;
                        assign(slot, v, what, raw.country, raw.year);
                        rec.gini[src.name] = *slot;
                        break;
                    }
                    case Var::gdp: assign(rec.gdp_ppp_pc, v, what, raw.country, raw.year); break;
                    case Var::schooling: assign(rec.schooling, v, what, raw.country, raw.year); break;
                    case Var::population: assign(rec.population, v, what, raw.country, raw.year); break;
                    case Var::governance:
                        assign(rec.governance[r.governance_index], v, what, raw.country, raw.year);
                        break;
                }
            }
        }
    }

    out.records.reserve(merged.size());
    for (auto& [key, rec] : merged) out.records.push_back(std::move(rec));
    return out;
}

std::vector<PeriodSpec> default_periods() {
    return {{"1963-1969", 1963, 1969},
            {"1970-1979", 1970, 1979},
            {"1980-1989", 1980, 1989},
            {"1990-1999", 1990, 1999},
            {"2000-2008", 2000, 2008}};
}

void validate_periods(std::span<const PeriodSpec> periods) {
    std::set<std::string> ids;
    for (const auto& p : periods) {
        if (p.start_year > p.end_year)
            throw Error("ingest", "invalid_period", "period '" + p.id + "' has start > end");
        if (!ids.insert(p.id).second)
            throw Error("ingest", "invalid_period", "duplicate period id '" + p.id + "'");
    }
    for (std::size_t i = 0; i < periods.size(); ++i)
        for (std::size_t j = i + 1; j < periods.size(); ++j)
            if (periods[i].start_year <= periods[j].end_year &&
                periods[j].start_year <= periods[i].end_year)
                throw Error("ingest", "invalid_period",
                            "periods '" + periods[i].id + "' and '" + periods[j].id + "' overlap");
}

std::vector<PeriodSpec> parse_periods_json(std::string_view text) {
    std::vector<PeriodSpec> out;
    try {
        auto j = nlohmann::json::parse(text);
        for (const auto& p : j)
            out.push_back({p.at("id").get<std::string>(), p.at("start").get<int>(),
                           p.at("end").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error("ingest", "invalid_periods", std::string("periods config: ") + e.what());
    }
    validate_periods(out);
    return out;
}

const CountryPeriodRecord* PeriodFrame::panel_for(std::string_view country) const {
    auto it = std::lower_bound(panel.begin(), panel.end(), country,
                               [](const CountryPeriodRecord& r, std::string_view c) {
                                   return r.country < c;
                               });
    return it != panel.end() && it->country == country ? &*it : nullptr;
}

namespace {

struct Mean {
    double sum = 0.0;
    int count = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++count;
        }
    }
    std::optional<double> value() const {
        return count ? std::optional<double>(sum / count) : std::nullopt;
    }
};

struct PanelAccumulator {
    std::map<std::string, Mean> gini;
    Mean gdp, schooling, population;
    std::array<Mean, kGovernanceCount> governance;
};

}  // namespace

PeriodFrame build_period(std::span<const TradeFlow> flows,
                         std::span<const CountryPanelRecord> panel, const PeriodSpec& period,
                         const FrameFilter& filter) {
    PeriodFrame frame;
    frame.period = period;
    const double years = period.years();

    std::map<std::pair<std::string, std::string>, double> cells;
    std::map<std::string, double> country_total;
    std::set<std::string> products;
    for (const auto& f : flows) {
        if (!period.contains(f.year)) continue;
        cells[{f.origin, f.product}] += f.value;
        country_total[f.origin] += f.value;
        products.insert(f.product);
    }

    std::map<std::string, PanelAccumulator> acc;
    for (const auto& r : panel) {
        if (!period.contains(r.year)) continue;
        auto& a = acc[r.country];
        for (const auto& [tag, g] : r.gini) a.gini[tag].add(g);
        a.gdp.add(r.gdp_ppp_pc);
        a.schooling.add(r.schooling);
        a.population.add(r.population);
        for (std::size_t g = 0; g < kGovernanceCount; ++g) a.governance[g].add(r.governance[g]);
    }

    std::vector<std::string> kept;
    for (const auto& [country, total] : country_total) {
        const double mean_exports = total / years;
        std::optional<double> pop;
        if (auto it = acc.find(country); it != acc.end()) pop = it->second.population.value();
        if (filter.min_population >= 0.0) {
            if (!pop) {
                frame.excluded.push_back({country, "population unknown"});
                continue;
            }
            if (!(*pop > filter.min_population)) {
                frame.excluded.push_back({country, "population below threshold"});
                continue;
            }
        }
        if (!(mean_exports > filter.min_exports)) {
            frame.excluded.push_back({country, "exports below threshold"});
            continue;
        }
        kept.push_back(country);
    }

    if (kept.empty()) {
        frame.empty = true;
        return frame;
    }
    frame.empty = false;

    // Only products some retained country actually exports.
    std::set<std::string> live;
    for (const auto& [key, v] : cells)
        if (v > 0.0 && std::binary_search(kept.begin(), kept.end(), key.first)) live.insert(key.second);
    Registry cr(kept);
    Registry pr(std::vector<std::string>(live.begin(), live.end()));
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(cr.size(), pr.size());
    for (const auto& [key, v] : cells) {
        auto c = cr.index_of(key.first);
        auto p = pr.index_of(key.second);
        if (c && p) x(*c, *p) = v / years;
    }
    frame.exports = matrix::make_exports(std::move(cr), std::move(pr), std::move(x));

    for (const auto& country : kept) {
        auto it = acc.find(country);
        if (it == acc.end()) continue;
        const auto& a = it->second;
        CountryPeriodRecord rec;
        rec.country = country;
        rec.period = period.id;
        for (const auto& [tag, m] : a.gini)
            if (auto v = m.value()) rec.gini[tag] = *v;
        rec.gdp_ppp_pc = a.gdp.value();
        rec.schooling = a.schooling.value();
        rec.population = a.population.value();
        for (std::size_t g = 0; g < kGovernanceCount; ++g) rec.governance[g] = a.governance[g].value();
        frame.panel.push_back(std::move(rec));
    }
    return frame;
}

AnalysisFrame build_frame(std::span<const TradeFlow> flows,
                          std::span<const CountryPanelRecord> panel,
                          std::span<const PeriodSpec> periods, const FrameFilter& filter) {
    validate_periods(periods);
    AnalysisFrame frame;
    frame.periods.reserve(periods.size());
    for (const auto& p : periods) frame.periods.push_back(build_period(flows, panel, p, filter));
    return frame;
}

}  // namespace atlas::ingest
