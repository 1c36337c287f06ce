#include <CLI11.hpp>
#include <semid/semid.hpp>

int main(int argc, char** argv) {
    CLI::App app{"identification engine for linear structural equation models"};
    app.require_subcommand(1);

    semid::RunConfig cfg;
    std::string format = "text";

    auto add_common = [&](CLI::App* sub, bool needs_cov) {
        sub->add_option("graph", cfg.graph_path, "graph file")->required();
        sub->add_option("--known", cfg.known_path, "known-coefficient file");
        auto* cov = sub->add_option("--cov", cfg.cov_path, "covariance CSV");
        if (needs_cov) cov->required();
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--trials", cfg.trials, "verification trials")
            ->check(CLI::PositiveNumber);
        sub->add_option("--tol", cfg.tol, "numeric tolerance");
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"text", "json"}));
    };

    auto* identify = app.add_subcommand("identify", "run the aux-IS fixpoint");
    add_common(identify, false);
    identify->add_flag("--compare", cfg.compare, "also report simple-IS and g-HTC verdicts");

    auto* verify = app.add_subcommand("verify", "check certificates on random instances");
    add_common(verify, false);

    auto* constraints = app.add_subcommand("constraints", "derive testable implications");
    add_common(constraints, false);
    constraints->add_flag("--external-only", cfg.external_only,
                          "use only externally known coefficients");

    auto* estimate = app.add_subcommand("estimate", "solve certificates against a covariance");
    add_common(estimate, true);

    auto* compare = app.add_subcommand("compare", "per-edge verdicts of the three methods");
    add_common(compare, false);

    CLI11_PARSE(app, argc, argv);
    cfg.json = format == "json";

    if (identify->parsed()) return semid::cmd_identify(cfg, std::cout, std::cerr);
    if (verify->parsed()) return semid::cmd_verify(cfg, std::cout, std::cerr);
    if (constraints->parsed()) return semid::cmd_constraints(cfg, std::cout, std::cerr);
    if (estimate->parsed()) return semid::cmd_estimate(cfg, std::cout, std::cerr);
    if (compare->parsed()) return semid::cmd_compare(cfg, std::cout, std::cerr);
    return 1;
}
