// Copyright 2026 The sit2stand Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>

#include <CLI11.hpp>

#include "sit2stand/cli.hpp"

namespace cli = sit2stand::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Sit-to-stand biomechanics and robotic cane assistance toolkit"};
    app.set_version_flag("--version", cli::kVersion);
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate paired assisted/control sit-to-stand episodes");
    simulate->add_option("--scenario", sim.scenario, "Scenario file (key = value)")->required();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--config", sim.config,
                         std::string("Anthropometric override file (default: $") + cli::kConfigEnv + ")");

    cli::AnalyzeOptions ana;
    auto* analyze = app.add_subcommand("analyze", "Extract events and GRF parameters from force-plate data");
    analyze->add_option("--grf", ana.grf, "Force-plate CSV t,fz[,seat_fz][,cane_fz][,fx][,cop_x]; repeat per trial")
        ->required();
    analyze->add_option("--skeleton", ana.skeleton, "Skeleton record file, or - for standard input");
    analyze->add_option("--out", ana.out, "Output directory")->required();
    analyze->add_option("--scenario", ana.scenario, "Scenario file giving the subject for the model comparison");
    analyze->add_option("--config", ana.config,
                        std::string("Anthropometric override file (default: $") + cli::kConfigEnv + ")");
    analyze->add_option("--condition", ana.condition, "Condition label for the parameter table");
    analyze->add_option("--body-weight", ana.body_weight,
                        "Body weight in N (default: mean support over the final 0.5 s)");
    analyze->add_flag("--detect-onset", ana.detect_onset, "Detect movement onset instead of using the first sample");

    cli::CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "Compare the parameter tables of two runs");
    compare->add_option("run_a", cmp.run_a, "Run directory or parameters.csv (reference)")->required();
    compare->add_option("run_b", cmp.run_b, "Run directory or parameters.csv")->required();
    compare->add_option("--out", cmp.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kValidationFailure;
    }

    if (*simulate) return cli::guarded([&] { return cli::cmd_simulate(sim, std::cout); }, std::cerr);
    if (*analyze) return cli::guarded([&] { return cli::cmd_analyze(ana, std::cout, std::cin); }, std::cerr);
    return cli::guarded([&] { return cli::cmd_compare(cmp, std::cout); }, std::cerr);
}
