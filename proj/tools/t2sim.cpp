// t2sim command-line front end.
//
//   t2sim assemble <src> [--mode pool|movw] [--origin A] [-o image]
//   t2sim run <config> [--trace out] [--report out]
//   t2sim scenario <name> [--set key=value]... [--trace out] [--report out]
//   t2sim inject --seed S --count N [--target T] [--report out]
//
// Exit status: 0 pass, 1 assertion failure, 2 configuration or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "t2sim/assembler/assembler.hpp"
#include "t2sim/harness/config.hpp"
#include "t2sim/harness/report.hpp"
#include "t2sim/harness/runner.hpp"
#include "t2sim/harness/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace t2sim;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfigError = 2;
constexpr std::size_t kMaxFlatImage = 16u << 20;

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError(p.string() + ": cannot open");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError(p.string() + ": cannot write");
    out << text;
}

// Writes to `path`, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

json parse_override_value(const std::string& text) {
    try {
        std::size_t used = 0;
        const auto n = std::stoll(text, &used, 0);
        if (used == text.size()) return n;
    } catch (const std::exception&) {
    }
    if (text == "true") return true;
    if (text == "false") return false;
    return text;
}

int cmd_assemble(const std::string& src, const std::string& mode, const std::string& origin, std::string out) {
    assembler::AsmOptions opts;
    if (!mode.empty()) {
        opts.mode = assembler::parse_load_mode(mode);
        if (!opts.mode) throw ConfigError("--mode: expected pool or movw");
    }
    if (!origin.empty()) opts.origin = static_cast<Address>(std::stoul(origin, nullptr, 0));
    assembler::ProgramImage image;
    try {
        image = assembler::assemble(read_file(src), opts);
    } catch (const assembler::AsmError& e) {
        throw ConfigError(src + ": " + e.what());
    }
    const auto flat = assembler::flat_binary(image);
    if (flat.bytes.size() > kMaxFlatImage) {
        throw ConfigError(src + ": segments span more than 16 MiB; no flat image written");
    }
    if (out.empty()) out = fs::path(src).replace_extension(".bin").string();
    write_file(out, std::string(flat.bytes.begin(), flat.bytes.end()));
    auto sidecar = harness::image_sidecar_json(image);
    sidecar["base"] = harness::hex32(flat.base);
    write_file(out + ".json", harness::dump(sidecar));

    const auto size = assembler::code_size_report(image);
    std::printf("%s: %zu bytes at %s (entry %s), %zu narrow + %zu wide instructions, %zu pool bytes, ratio %.3f\n",
                out.c_str(), flat.bytes.size(), harness::hex32(flat.base).c_str(), harness::hex32(image.entry).c_str(),
                static_cast<std::size_t>(size.count16), static_cast<std::size_t>(size.count32), static_cast<std::size_t>(size.pool_bytes), size.ratio);
    return kPass;
}

int cmd_run(const std::string& config, const std::string& trace, const std::string& report) {
    auto cfg = harness::load_config_file(config);
    if (trace.empty()) cfg.sim.record_trace = false;
    const auto result = harness::run_config(cfg);
    emit(report, harness::dump(result.report));
    if (!trace.empty()) emit(trace, result.trace);
    std::fprintf(stderr, "%s: %s\n", cfg.name.c_str(), result.pass ? "PASS" : "FAIL");
    return result.pass ? kPass : kFail;
}

json parse_overrides(const std::vector<std::string>& sets) {
    json overrides = json::object();
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + s + ": expected key=value");
        overrides[s.substr(0, eq)] = parse_override_value(s.substr(eq + 1));
    }
    return overrides;
}

int cmd_scenario(const std::string& name, const json& overrides, const std::string& trace, const std::string& report) {
    const auto result = harness::run_scenario(name, overrides);
    emit(report, harness::dump(result.report));
    if (!trace.empty()) emit(trace, result.trace);
    std::fprintf(stderr, "%s: %s\n", result.name.c_str(), result.pass ? "PASS" : "FAIL");
    return result.pass ? kPass : kFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-accounting Thumb-2-style core simulator"};
    app.require_subcommand(1);

    std::string src, mode, origin, out;
    auto* assemble = app.add_subcommand("assemble", "Assemble a source file into a flat image plus a JSON sidecar");
    assemble->add_option("src", src, "Assembly source")->required();
    assemble->add_option("--mode", mode, "Constant loading: pool or movw (overrides .mode)");
    assemble->add_option("--origin", origin, "Start address before the first .org");
    assemble->add_option("-o,--output", out, "Image path (default: <src>.bin)");

    std::string config, trace, report;
    auto* run = app.add_subcommand("run", "Run a configuration document");
    run->add_option("config", config, "Configuration JSON")->required();
    run->add_option("--trace", trace, "Write the NDJSON trace here ('-' for stdout)");
    run->add_option("--report", report, "Write the report here (default stdout)");

    std::string name;
    std::vector<std::string> sets;
    bool list = false;
    auto* scenario = app.add_subcommand("scenario", "Run a built-in scenario");
    scenario->add_option("name", name, "Scenario name");
    scenario->add_option("--set", sets, "Override a scenario parameter (key=value)");
    scenario->add_flag("--list", list, "List scenario names");
    scenario->add_option("--trace", trace, "Write the NDJSON trace here");
    scenario->add_option("--report", report, "Write the report here (default stdout)");

    std::uint64_t seed = 1;
    unsigned count = 100;
    std::string target = "all";
    auto* inject = app.add_subcommand("inject", "Run a seeded soft-error campaign");
    inject->add_option("--seed", seed, "Campaign seed")->required();
    inject->add_option("--count", count, "Injections per target")->required();
    inject->add_option("--target", target, "all, icache_data, icache_tag, dcache_data, dcache_tag or tcm");
    inject->add_option("--report", report, "Write the report here (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kConfigError;
    }

    try {
        if (*assemble) return cmd_assemble(src, mode, origin, out);
        if (*run) return cmd_run(config, trace, report);
        if (*scenario) {
            if (list) {
                for (const auto& n : harness::scenario_names()) std::cout << n << "\n";
                return kPass;
            }
            if (name.empty()) throw ConfigError("scenario: a name is required (see --list)");
            return cmd_scenario(name, parse_overrides(sets), trace, report);
        }
        if (*inject) {
            const json overrides = {{"seed", seed}, {"count", count}, {"target", target}};
            return cmd_scenario("soft_error", overrides, "", report);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kConfigError;
}
