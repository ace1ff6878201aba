#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atlas/common.hpp"
#include "atlas/matrix.hpp"

namespace atlas::ingest {

struct TradeFlow {
    int year = 0;
    std::string origin;   // ISO-3
    std::string product;  // SITC-4, exactly four characters
    double value = 0.0;   // current USD

    friend bool operator==(const TradeFlow&, const TradeFlow&) = default;
};

/// Column names for a trade table plus the accepted year range.
struct TradeSchema {
    std::string year = "year";
    std::string origin = "origin";
    std::string product = "sitc4";
    std::string value = "value_usd";
    int min_year = 1962;
    int max_year = 2008;
};

struct RowRejection {
    std::string source;  // file stem, empty for single-source parses
    std::size_t row = 0; // 1-based data row (header excluded)
    std::string reason;
};

struct TradeTable {
    std::vector<TradeFlow> flows;
    std::vector<RowRejection> rejections;
};

/// Parses a comma-delimited trade table with a header row. Rows that fail
/// validation are reported in `rejections`; a missing column throws.
TradeTable parse_trade_table(std::istream& source, const TradeSchema& schema = {});

inline constexpr std::size_t kGovernanceCount = 6;

/// Governance score column names, in storage order.
inline constexpr std::array<const char*, kGovernanceCount> kGovernanceNames = {
    "rule_of_law",        "corruption_control",  "government_effectiveness",
    "political_stability", "regulatory_quality", "voice_accountability",
};

/// One country-year of panel variables. Gini values are on the [0,1] scale and
/// keyed by dataset tag (the stem of the file they came from).
struct CountryPanelRecord {
    std::string country;
    int year = 0;
    std::map<std::string, double> gini;
    std::optional<double> gdp_ppp_pc;
    std::optional<double> schooling;
    std::optional<double> population;
    std::array<std::optional<double>, kGovernanceCount> governance{};
};

struct NamedSource {
    std::string name;  // dataset tag, usually the file stem
    std::string text;
};

struct PanelTables {
    std::vector<CountryPanelRecord> records;  // sorted by (country, year)
    std::vector<RowRejection> rejections;
};

/// Parses long-format `country,year,<variable>...` tables and merges them by
/// (country, year). Conflicting duplicate values throw an Error naming the
/// conflict.
PanelTables parse_panel_tables(std::span<const NamedSource> sources);

struct PeriodSpec {
    std::string id;
    int start_year = 0;
    int end_year = 0;

    int years() const { return end_year - start_year + 1; }
    bool contains(int year) const { return year >= start_year && year <= end_year; }

    friend bool operator==(const PeriodSpec&, const PeriodSpec&) = default;
};

/// 1963-1969, 1970-1979, 1980-1989, 1990-1999, 2000-2008.
std::vector<PeriodSpec> default_periods();

/// Throws unless every period has start <= end and no two periods overlap.
void validate_periods(std::span<const PeriodSpec> periods);

/// Parses a JSON list of `{id,start,end}` objects.
std::vector<PeriodSpec> parse_periods_json(std::string_view text);

struct FrameFilter {
    double min_population = 1.5e6;  // strictly greater than
    double min_exports = 1e9;       // period-mean total exports, strictly greater than
};

/// Period means of panel variables for one country.
struct CountryPeriodRecord {
    std::string country;
    std::string period;
    std::map<std::string, double> gini;
    std::optional<double> gdp_ppp_pc;
    std::optional<double> schooling;
    std::optional<double> population;
    std::array<std::optional<double>, kGovernanceCount> governance{};
};

struct Exclusion {
    std::string country;
    std::string reason;
};

struct PeriodFrame {
    PeriodSpec period;
    bool empty = true;  // no surviving countries
    matrix::ExportMatrix exports;
    std::vector<CountryPeriodRecord> panel;  // one per retained country with any panel data
    std::vector<Exclusion> excluded;

    const CountryPeriodRecord* panel_for(std::string_view country) const;
};

struct AnalysisFrame {
    std::vector<PeriodFrame> periods;
};

/// Averages yearly trade and panel data into period frames and applies the
/// population/export filter per period.
AnalysisFrame build_frame(std::span<const TradeFlow> flows,
                          std::span<const CountryPanelRecord> panel,
                          std::span<const PeriodSpec> periods,
                          const FrameFilter& filter = {});

/// Aggregates one period. Empty periods come back with `empty == true`.
PeriodFrame build_period(std::span<const TradeFlow> flows,
                         std::span<const CountryPanelRecord> panel,
                         const PeriodSpec& period, const FrameFilter& filter = {});

/// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace atlas::ingest
