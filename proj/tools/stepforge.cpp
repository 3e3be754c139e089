// stepforge command-line entry point.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "stepforge/config.hpp"
#include "stepforge/pipeline.hpp"
#include "stepforge/text.hpp"

namespace sf = stepforge;
namespace pl = stepforge::pipeline;

namespace {

struct Globals {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::string out = "out";
};

sf::config::PipelineConfig load_config(const Globals& g) {
    sf::config::KeyValues file;
    if (!g.config_file.empty()) file = sf::config::read_config_file(g.config_file);
    sf::config::KeyValues flags;
    if (g.seed) flags["rng_seed"] = std::to_string(*g.seed);
    return sf::config::build_pipeline_config(sf::config::merge({file, sf::config::environment_overrides(), flags}));
}

int finish(const pl::RunReport& rep) {
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : rep.failures) std::cerr << "error: " << f << "\n";
    return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stepforge: step counting, activity summaries and mortality models for wrist accelerometry"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output directory");

    auto* steps = app.add_subcommand("steps", "raw recordings -> per-minute steps, AC and MIMS");
    std::string raw_dir, wear_dir;
    bool no_cache = false;
    steps->add_option("raw_dir", raw_dir, "directory of raw recordings")->required();
    steps->add_option("--wear", wear_dir, "directory of per-subject wear files (day,minute,wear[,flag])");
    steps->add_flag("--no-cache", no_cache, "ignore and do not write the binary sample cache");

    auto* analyze = app.add_subcommand("analyze", "minute files -> validity, summaries and report tables");
    std::string minutes, covariates, mortality;
    analyze->add_option("minutes", minutes, "minute file or directory")->required();
    analyze->add_option("--covariates", covariates, "covariate table");
    analyze->add_option("--mortality", mortality, "mortality table");

    auto* bench = app.add_subcommand("bench", "time detectors on synthetic recordings");
    pl::BenchOptions bo;
    std::string bench_detectors = "peak_original";
    bench->add_option("--subjects", bo.n_subjects, "synthetic subjects")->capture_default_str();
    bench->add_option("--days", bo.days, "days per subject")->capture_default_str();
    bench->add_option("--rate", bo.rate_hz, "sampling rate in Hz")->capture_default_str();
    bench->add_option("--detectors", bench_detectors, "comma-separated detector names")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "write a synthetic cohort or raw recordings");
    pl::SimulateOptions so;
    sim->add_option("kind", so.kind, "study or raw")->check(CLI::IsMember({"study", "raw"}));
    sim->add_option("--subjects", so.n_subjects, "subjects")->capture_default_str();
    sim->add_option("--days", so.days, "days per subject (study)")->capture_default_str();
    sim->add_option("--minutes", so.minutes, "minutes per recording (raw)")->capture_default_str();
    sim->add_option("--rate", so.rate_hz, "sampling rate in Hz (raw)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto cfg = load_config(g);
        if (steps->parsed()) {
            pl::StepsOptions o;
            o.raw_dir = raw_dir;
            o.out_dir = g.out;
            if (!wear_dir.empty()) o.wear_dir = wear_dir;
            o.config = cfg;
            o.jobs = g.jobs;
            o.use_cache = !no_cache;
            return finish(pl::run_steps(o, std::cerr));
        }
        if (analyze->parsed()) {
            pl::AnalyzeOptions o;
            o.minutes = minutes;
            if (!covariates.empty()) o.covariates = covariates;
            if (!mortality.empty()) o.mortality = mortality;
            o.out_dir = g.out;
            o.config = cfg;
            o.jobs = g.jobs;
            return finish(pl::run_analyze(o, std::cerr));
        }
        if (bench->parsed()) {
            bo.detectors.clear();
            for (const auto& n : sf::text::split_row(bench_detectors)) {
                std::string t(sf::text::trim(n));
                if (!t.empty()) bo.detectors.push_back(t);
            }
            bo.params = cfg.detectors;
            bo.out_dir = g.out;
            if (g.seed) bo.seed = *g.seed;
            for (const auto& r : pl::run_bench(bo, std::cerr))
                std::cout << r.detector << ": " << sf::text::format_fixed(r.minutes_per_10_subjects, 2)
                          << " min per 10 subjects\n";
            return 0;
        }
        so.out_dir = g.out;
        if (g.seed) so.seed = *g.seed;
        return finish(pl::run_simulate(so, std::cerr));
    } catch (const sf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 2;
    }
}
