// Command-line driver: synthetic data generation, fitting and exporting bounds
// for CSV data, benchmarks against ground truth, and the property battery.

#include "cdte/csv.hpp"
#include "cdte/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

namespace {

using namespace cdte;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct LearnerFlags {
    std::string learner = "au";
    std::string estimand = "cdf";
    std::optional<double> gamma;
    int k_folds = 5;
    Index n_delta = 50;
    Index n_alpha = 50;
    Index n_y = 200;
    double clip_floor = 0.05;
    double ridge = 1.0;
    int degree = 2;
    std::string method = "kernel";
    double bandwidth_scale = 1.0;
};

void add_learner_flags(CLI::App* cmd, LearnerFlags& f, bool with_learner) {
    if (with_learner) {
        cmd->add_option("--learner", f.learner, "Learner: plugin, iptw, ca or au")
            ->check(CLI::IsMember({"plugin", "iptw", "ca", "au"}))
            ->capture_default_str();
        cmd->add_option("--estimand", f.estimand, "Estimand: cdf or quantile")
            ->check(CLI::IsMember({"cdf", "quantile"}))
            ->capture_default_str();
    }
    cmd->add_option("--gamma", f.gamma, "AU correction scale in [0, 1] (default 0.25 for cdf, 0.01 for quantile)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--k-folds", f.k_folds, "Cross-fitting folds (1 = fit both stages on the same rows)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--n-delta", f.n_delta, "Points on the delta grid")->check(CLI::Range(2, 100000))->capture_default_str();
    cmd->add_option("--n-alpha", f.n_alpha, "Points on the alpha grid")->check(CLI::Range(2, 100000))->capture_default_str();
    cmd->add_option("--n-y", f.n_y, "Points on the outcome grid")->check(CLI::Range(2, 100000))->capture_default_str();
    cmd->add_option("--clip-floor", f.clip_floor, "Propensity clipping floor")
        ->check(CLI::Range(1e-9, 0.4999))
        ->capture_default_str();
    cmd->add_option("--ridge", f.ridge, "Second-stage ridge penalty")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--degree", f.degree, "Second-stage polynomial basis degree")->check(CLI::Range(0, 3))->capture_default_str();
    cmd->add_option("--method", f.method, "Conditional CDF estimator: kernel or gaussian")
        ->check(CLI::IsMember({"kernel", "gaussian"}))
        ->capture_default_str();
    cmd->add_option("--bandwidth-scale", f.bandwidth_scale, "Multiplier on Scott's rule bandwidth")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

LearnerConfig learner_config(const LearnerFlags& f) {
    LearnerConfig c;
    c.learner = parse_learner(f.learner);
    c.estimand = parse_estimand(f.estimand);
    c.gamma = f.gamma;
    c.k_folds = f.k_folds;
    c.clip_floor = f.clip_floor;
    c.ridge = f.ridge;
    c.degree = f.degree;
    return c;
}

NuisanceOptions nuisance_options(const LearnerFlags& f) {
    NuisanceOptions o;
    o.method = f.method == "gaussian" ? CdfMethod::gaussian_loc_scale : CdfMethod::kernel_empirical;
    o.hyper.bandwidth_scale = f.bandwidth_scale;
    o.clip_floor = f.clip_floor;
    return o;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json working_model_json(const WorkingModel& m) {
    json coef = json::array();
    for (Index j = 0; j < m.coef().cols(); ++j) coef.push_back(vector_json(m.coef().col(j)));
    return {{"side", to_string(m.side())},
            {"estimand", to_string(m.kind())},
            {"grid", vector_json(m.grid())},
            {"degree", m.features().degree()},
            {"center", vector_json(m.features().center())},
            {"scale", vector_json(m.features().scale())},
            {"coef_by_grid_point", coef}};
}

json nuisance_json(const NuisanceFit& fit) {
    json folds = json::array();
    auto fold_json = [](const FoldNuisance& f) {
        json arms = json::array();
        for (int a = 0; a < 2; ++a) {
            const CondCdfModel& m = f.arm_model(a);
            if (m.method() == CdfMethod::gaussian_loc_scale) {
                arms.push_back({{"arm", a}, {"method", "gaussian"}, {"mean_weights", vector_json(m.mean_weights())},
                                {"scale", m.scale()}});
            } else {
                arms.push_back({{"arm", a}, {"method", "kernel"}, {"bandwidth", vector_json(m.bandwidth())},
                                {"training_rows", m.row_weights().size()}});
            }
        }
        return json{{"propensity_weights", vector_json(f.propensity_model().weights())},
                    {"propensity_converged", f.propensity_model().converged()},
                    {"training_rows", f.training_rows().size()},
                    {"outcome_models", arms}};
    };
    for (const FoldNuisance& f : fit.folds) folds.push_back(fold_json(f));
    return {{"k_folds", fit.plan.k}, {"folds", folds}, {"full", fold_json(fit.full)}};
}

// Flat config keys apply to whichever subcommand was invoked.
class SubcommandConfig : public CLI::ConfigTOML {
public:
    explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
        const auto subs = app_->get_subcommands();
        if (subs.size() != 1) return items;
        for (CLI::ConfigItem& item : items) {
            if (item.parents.empty()) item.parents.push_back(subs.front()->get_name());
        }
        return items;
    }

private:
    const CLI::App* app_;
};

int cmd_generate(const std::string& setting, Index n, std::uint64_t seed, const std::string& out) {
    const Dataset data = generate_synth({parse_synth_kind(setting), seed}, n);
    emit(out, dataset_to_csv(data));
    return 0;
}

struct FitFlags {
    std::string input;
    std::string test_csv;
    std::string out_bounds;
    std::string out_model;
    bool benefit = false;
};

int cmd_fit(const FitFlags& ff, const LearnerFlags& lf) {
    const Dataset train = read_dataset_csv(ff.input);
    LearnerConfig cfg = learner_config(lf);
    cfg.grid = default_grid(train, lf.n_delta, lf.n_alpha, lf.n_y);
    if (ff.benefit && cfg.estimand != BoundKind::cdf) {
        throw std::invalid_argument("--benefit reports CDF bounds at delta = 0 and needs --estimand cdf");
    }
    const FittedLearner fitted = fit_learner(train, cfg, nuisance_options(lf));

    std::optional<Dataset> query;
    if (!ff.test_csv.empty()) query = read_dataset_csv(ff.test_csv);
    const Index rows = query ? query->size() : train.size();
    if (query && query->dim() != train.dim()) throw std::invalid_argument("--test-csv has a different covariate count");

    std::vector<BoundsRow> out;
    long crossings = 0;
    for (Index i = 0; i < rows; ++i) {
        const BoundsPrediction p = query ? fitted.predict(query->x(i)) : fitted.predict_training_row(train, i);
        crossings += p.crossings;
        if (ff.benefit) {
            out.push_back({i, 0.0, p.bounds.lower_cdf()(0.0), p.bounds.upper_cdf()(0.0)});
            continue;
        }
        for (Index j = 0; j < p.bounds.grid().size(); ++j) {
            out.push_back({i, p.bounds.grid()(j), p.bounds.lower()(j), p.bounds.upper()(j)});
        }
    }
    emit(ff.out_bounds, bounds_to_csv(out));
    std::cerr << "learner " << to_string(cfg.learner) << ", " << rows << " query rows, bound crossings swapped: " << crossings
              << "\n";

    if (!ff.out_model.empty()) {
        json model{{"learner", to_string(cfg.learner)},
                   {"estimand", to_string(cfg.estimand)},
                   {"gamma", cfg.effective_gamma()},
                   {"k_folds", cfg.k_folds},
                   {"clip_floor", cfg.clip_floor},
                   {"ridge", cfg.ridge},
                   {"grid", {{"delta", vector_json(cfg.grid.delta)},
                             {"alpha", vector_json(cfg.grid.alpha)},
                             {"y", vector_json(cfg.grid.y)}}}};
        if (fitted.nuisances()) model["nuisances"] = nuisance_json(*fitted.nuisances());
        if (fitted.lower_model()) {
            model["working_models"] = {working_model_json(*fitted.lower_model()), working_model_json(*fitted.upper_model())};
        }
        write_file(ff.out_model, model.dump(2) + "\n");
    }
    return 0;
}

struct BenchFlags {
    std::string setting = "normal";
    std::vector<std::uint64_t> seeds{0};
    std::vector<Index> n_train{1000};
    Index n_test = 1000;
    std::vector<std::string> learners{"plugin", "iptw", "ca", "au"};
    std::vector<std::string> estimands{"cdf"};
    std::string out;
};

int cmd_benchmark(const BenchFlags& bf, const LearnerFlags& lf) {
    BenchmarkConfig cfg;
    cfg.kind = parse_synth_kind(bf.setting);
    cfg.seeds = bf.seeds;
    cfg.n_train = bf.n_train;
    cfg.n_test = bf.n_test;
    cfg.learners.clear();
    for (const std::string& l : bf.learners) cfg.learners.push_back(parse_bench_learner(l));
    cfg.estimands.clear();
    for (const std::string& e : bf.estimands) cfg.estimands.push_back(parse_estimand(e));
    cfg.learner = learner_config(lf);
    cfg.nuisance = nuisance_options(lf);
    cfg.n_delta = lf.n_delta;
    cfg.n_alpha = lf.n_alpha;
    cfg.n_y = lf.n_y;
    emit(bf.out, metrics_to_csv(run_benchmark(cfg)));
    return 0;
}

int cmd_verify(bool full) {
    bool ok = true;
    for (const PropertyResult& r : run_battery(full)) {
        std::cout << format_result(r) << std::endl;
        ok = ok && r.passed;
    }
    return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounds on the conditional distribution of treatment effects"};
    app.require_subcommand(1);
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.config_formatter(std::make_shared<SubcommandConfig>(&app));
    app.set_config("--config", "", "Flat key = value file with long flag names as keys; flags override its keys");

    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
    std::string setting = "normal";
    Index n = 1000;
    std::uint64_t seed = 0;
    std::string gen_out;
    gen->add_option("--setting", setting, "normal, multimodal or exponential")
        ->check(CLI::IsMember({"normal", "multimodal", "exponential"}))
        ->capture_default_str();
    gen->add_option("--n", n, "Rows to draw")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Output path (stdout when omitted)");

    auto* fit = app.add_subcommand("fit", "Fit a learner on a CSV dataset and export bounds");
    FitFlags ff;
    LearnerFlags fit_lf;
    fit->add_option("--input", ff.input, "Training CSV with header x1,...,xd,a,y")->required();
    fit->add_option("--test-csv", ff.test_csv, "Query points (same schema); training covariates when omitted");
    fit->add_option("--out", ff.out_bounds, "Bounds CSV path (stdout when omitted)");
    fit->add_option("--model-out", ff.out_model, "Write the fitted models as JSON");
    fit->add_flag("--benefit", ff.benefit, "Only report the CDF bounds at delta = 0");
    add_learner_flags(fit, fit_lf, true);

    auto* bench = app.add_subcommand("benchmark", "Score learners on synthetic data against the true bounds");
    BenchFlags bf;
    LearnerFlags bench_lf;
    bench->add_option("--setting", bf.setting, "normal, multimodal or exponential")
        ->check(CLI::IsMember({"normal", "multimodal", "exponential"}))
        ->capture_default_str();
    bench->add_option("--seed", bf.seeds, "Seeds, comma separated")->delimiter(',')->capture_default_str();
    bench->add_option("--n-train", bf.n_train, "Training sizes, comma separated")->delimiter(',')->capture_default_str();
    bench->add_option("--n-test", bf.n_test, "Test rows")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--learner", bf.learners, "Learners (plugin, iptw, ca, au; append _oracle for true nuisances)")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--estimand", bf.estimands, "Estimands: cdf, quantile")->delimiter(',')->capture_default_str();
    bench->add_option("--out", bf.out, "Metrics CSV path (stdout when omitted)");
    add_learner_flags(bench, bench_lf, false);

    auto* verify = app.add_subcommand("verify", "Run the property battery; exit 1 on any failure");
    bool quick = false;
    verify->add_flag("--quick", quick, "Skip the slower learner-ordering and quasi-oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return cmd_generate(setting, n, seed, gen_out);
        if (*fit) return cmd_fit(ff, fit_lf);
        if (*bench) return cmd_benchmark(bf, bench_lf);
        if (*verify) return cmd_verify(!quick);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
