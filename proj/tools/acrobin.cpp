// acrobin command-line front end.
//
//   acrobin <subcommand> [--config run.cfg] [--key value ...] [--out DIR] [--threads N]
//
// Every config key is also a flag; flags override the file. The output
// directory defaults to $ACROBIN_OUT_DIR/<subcommand>, else ./acrobin_out/<subcommand>.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "acrobin/commands.hpp"

using namespace acrobin;

namespace {

std::filesystem::path default_out(const std::string& cmd) {
    const char* env = std::getenv("ACROBIN_OUT_DIR");
    const std::filesystem::path base = env && *env ? env : "acrobin_out";
    return base / cmd;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Allen-Cahn with nonlinear Robin boundary condition: numerical lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ACROBIN_VERSION);

    struct Sub {
        CLI::App* app;
        std::string config;
        std::map<std::string, std::string> flags;
    };
    std::map<std::string, Sub> subs;
    for (const auto& name : subcommands()) {
        auto& s = subs[name];
        s.app = app.add_subcommand(name, "run the " + name + " experiment");
        s.app->add_option("--config", s.config, "key = value configuration file")->check(CLI::ExistingFile);
        for (const auto& [key, setter] : detail::setters()) {
            if (key == "cmd") continue;
            s.app->add_option_function<std::string>("--" + key, [&s, key](const std::string& v) { s.flags[key] = v; },
                                                    "config key '" + key + "'");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (auto& [name, s] : subs) {
            if (!s.app->parsed()) continue;
            RunConfig cfg = s.config.empty() ? RunConfig{} : parse_config_file(s.config);
            cfg.cmd = name;
            for (const auto& [key, value] : s.flags) {
                try {
                    detail::setters().at(key)(cfg, value);
                } catch (const detail::bad_value& e) {
                    throw domain_error("--" + key + ": " + e.what());
                }
            }
            const std::filesystem::path out = cfg.out.empty() ? default_out(name) : std::filesystem::path(cfg.out);
            const auto res = run_command(cfg, out);
            std::cout << res.summary.dump(2) << '\n' << "outputs written to " << out.string() << '\n';
        }
    } catch (const numerical_error& e) {
        std::cerr << "acrobin: numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const domain_error& e) {
        std::cerr << "acrobin: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "acrobin: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
