#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "atlas/econometrics.hpp"
#include "atlas/json_io.hpp"
#include "atlas/service.hpp"
#include "atlas/snapshot.hpp"

namespace {

namespace fs = std::filesystem;
namespace ec = atlas::econometrics;
using atlas::io::json;

ec::PanelDataset load_panel(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw atlas::Error("econometrics", "unreadable_panel", "cannot read " + path.string());
    return ec::read_panel_csv(in);
}

int emit(const atlas::service::Response& r) {
    (r.status == 200 ? std::cout : std::cerr) << r.body;
    return r.status == 200 ? 0 : 1;
}

std::string read_text(const std::string& arg) {
    if (arg.empty() || arg[0] != '@') return arg;
    std::ifstream in(arg.substr(1));
    if (!in) throw atlas::Error("cli", "unreadable_file", "cannot read " + arg.substr(1));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Economic complexity and inequality atlas"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* build = app.add_subcommand("build", "Build a snapshot directory from a config file");
    build->add_option("-c,--config", config_path, "Build config JSON")->required()->check(CLI::ExistingFile);
    build->add_option("-o,--out", out_dir, "Override the output directory");

    std::string snapshot = "snapshot", period, metric = "eci", country;
    auto add_snapshot = [&](CLI::App* sub) {
        sub->add_option("-s,--snapshot", snapshot, "Snapshot directory")->capture_default_str();
    };
    auto* rank = app.add_subcommand("rank", "Country rankings for a period");
    add_snapshot(rank);
    rank->add_option("-p,--period", period)->required();
    rank->add_option("-m,--metric", metric, "eci, fitness, entropy or hhi")->capture_default_str();

    auto* pgi = app.add_subcommand("pgi", "Product Gini Index table for a period");
    add_snapshot(pgi);
    pgi->add_option("-p,--period", period)->required();

    auto* space = app.add_subcommand("productspace", "Product-space backbone for a period");
    add_snapshot(space);
    space->add_option("-p,--period", period)->required();

    auto* ctry = app.add_subcommand("country", "Portfolio and expected Gini of one country");
    add_snapshot(ctry);
    ctry->add_option("country", country)->required();
    ctry->add_option("-p,--period", period)->required();

    auto* periods = app.add_subcommand("periods", "List snapshot periods");
    add_snapshot(periods);

    std::vector<std::string> add, remove;
    auto* whatif = app.add_subcommand("whatif", "Expected Gini after adding or removing products");
    add_snapshot(whatif);
    whatif->add_option("country", country)->required();
    whatif->add_option("-p,--period", period)->required();
    whatif->add_option("--add", add)->delimiter(',');
    whatif->add_option("--remove", remove)->delimiter(',');

    std::string spec, panel_path;
    std::vector<std::string> drop;
    bool fe = false, as_json = false;
    auto* regress = app.add_subcommand("regress", "Fit a model on a panel CSV");
    regress->add_option("--spec", spec, "e.g. \"gini ~ eci + kuznets + schooling\"; prefix @ to read a file")
        ->required();
    regress->add_option("--panel", panel_path)->required()->check(CLI::ExistingFile);
    regress->add_flag("--fe", fe, "Country fixed effects");
    regress->add_flag("--json", as_json, "Print JSON instead of a table");
    regress->add_option("--drop", drop, "Report the semi-partial R2 of these terms");

    std::string m1, m2;
    bool no_schwarz = false;
    double alpha = 0.05;
    auto* clarke = app.add_subcommand("clarke", "Clarke test between two non-nested models");
    clarke->add_option("--m1", m1)->required();
    clarke->add_option("--m2", m2)->required();
    clarke->add_option("--panel", panel_path)->required()->check(CLI::ExistingFile);
    clarke->add_flag("--no-schwarz", no_schwarz, "Skip the Schwarz parameter correction");
    clarke->add_option("--alpha", alpha)->capture_default_str();
    clarke->add_flag("--fe", fe, "Country fixed effects");
    clarke->add_flag("--json", as_json, "Print JSON instead of text");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Serve a snapshot over HTTP");
    serve->add_option("-s,--snapshot", snapshot)->required()->check(CLI::ExistingDirectory);
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        using atlas::service::Params;
        using atlas::service::Service;
        if (*build) {
            auto config = atlas::service::load_config(config_path);
            if (!out_dir.empty()) config.output = out_dir;
            const auto summary = atlas::service::build_snapshot(config);
            std::cout << "snapshot " << summary.directory.string() << '\n'
                      << "digest " << summary.digest << '\n'
                      << "files " << summary.files.size() << '\n';
            return 0;
        }
        if (*rank) return emit(Service::open(snapshot).get("/rankings", Params{{"period", period}, {"metric", metric}}));
        if (*pgi) return emit(Service::open(snapshot).get("/pgi", Params{{"period", period}}));
        if (*space) return emit(Service::open(snapshot).get("/productspace", Params{{"period", period}}));
        if (*ctry) return emit(Service::open(snapshot).get("/country/" + country, Params{{"period", period}}));
        if (*periods) return emit(Service::open(snapshot).get("/periods", {}));
        if (*whatif) {
            const json body = {{"country", country}, {"period", period}, {"add", add}, {"remove", remove}};
            return emit(Service::open(snapshot).whatif(body.dump()));
        }
        if (*regress) {
            const auto data = load_panel(panel_path);
            const auto model = ec::parse_spec(read_text(spec));
            const auto fit = fe ? ec::fe_fit(data, model) : ec::ols_fit(data, model);
            std::vector<ec::SemiPartial> partials;
            for (const auto& term : drop) partials.push_back(ec::semi_partial(data, model, term));
            if (as_json) {
                json out = atlas::io::fit(fit);
                json sp = json::array();
                for (const auto& p : partials)
                    sp.push_back({{"term", p.term},
                                  {"delta_r2", atlas::io::number(p.delta_r2)},
                                  {"r2_full", atlas::io::number(p.r2_full)},
                                  {"r2_reduced", atlas::io::number(p.r2_reduced)}});
                if (!partials.empty()) out["semi_partial"] = std::move(sp);
                std::cout << atlas::io::dump(out);
            } else {
                const std::vector<ec::FitResult> fits{fit};
                std::cout << ec::format_table(fits, fe ? "Country fixed effects" : "Pooled OLS");
                for (const auto& p : partials)
                    std::cout << "semi-partial R2 of " << p.term << ": " << p.delta_r2 << '\n';
            }
            return 0;
        }
        if (*clarke) {
            const auto data = load_panel(panel_path);
            ec::ClarkeOptions opts;
            opts.schwarz = !no_schwarz;
            opts.alpha = alpha;
            const auto cmp = ec::compare_models(data, ec::parse_spec(read_text(m1)), ec::parse_spec(read_text(m2)),
                                                opts, fe);
            if (as_json) {
                std::cout << atlas::io::dump({{"model1", atlas::io::fit(cmp.fit1)},
                                              {"model2", atlas::io::fit(cmp.fit2)},
                                              {"clarke", atlas::io::clarke(cmp.clarke)}});
            } else {
                const std::vector<ec::FitResult> fits{cmp.fit1, cmp.fit2};
                std::cout << ec::format_table(fits, "Clarke comparison")
                          << "B = " << cmp.clarke.b_statistic << " of n = " << cmp.clarke.n
                          << " (ties " << cmp.clarke.ties << "), p = " << cmp.clarke.p_value
                          << ", preferred: " << ec::to_string(cmp.clarke.preferred) << '\n';
            }
            return 0;
        }
        if (*serve) {
            const auto service = Service::open(snapshot);
            std::cerr << "serving " << snapshot << " (digest " << service.digest() << ") on " << host << ':' << port
                      << '\n';
            atlas::service::serve(service, host, port);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
