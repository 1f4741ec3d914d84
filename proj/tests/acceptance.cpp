// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "cdte/csv.hpp"
#include "cdte/verify.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>

namespace {

using namespace cdte;
namespace fs = std::filesystem;

PropertyResult cli_reproducibility() {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = fs::temp_directory_path() / "cdte_acceptance";
    fs::create_directories(dir);
    const fs::path config = dir / "bench.toml";
    write_file(config.string(),
               "setting = \"normal\"\n"
               "seed = [20, 21]\n"
               "n-train = [150, 300]\n"
               "n-test = 300\n"
               "learner = [\"plugin\", \"iptw\", \"ca\", \"au\", \"au_oracle\"]\n"
               "estimand = [\"cdf\", \"quantile\"]\n");
    std::string outputs[2];
    int status = 0;
    for (int run = 0; run < 2; ++run) {
        const fs::path out = dir / ("metrics" + std::to_string(run) + ".csv");
        fs::remove(out);
        const std::string cmd = std::string("\"") + CDTE_CLI_PATH + "\" --config \"" + config.string() +
                                "\" benchmark --out \"" + out.string() + "\"";
        status = std::max(status, std::system(cmd.c_str()));
        if (fs::exists(out)) outputs[run] = read_file(out.string());
    }
    std::size_t differing = outputs[0].size() == outputs[1].size() ? 0 : 1;
    for (std::size_t i = 0; i < std::min(outputs[0].size(), outputs[1].size()); ++i) {
        differing += outputs[0][i] != outputs[1][i];
    }
    PropertyResult r;
    r.name = "CLI reproducibility";
    r.measured = double(differing);
    r.threshold = 0.0;
    r.relation = "==";
    r.passed = status == 0 && !outputs[0].empty() && differing == 0;
    r.detail = "differing bytes between two benchmark runs of one config (" + std::to_string(outputs[0].size()) +
               " bytes, exit status " + std::to_string(status) + ")";
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace

int main() {
    const std::vector<std::function<PropertyResult()>> criteria{
        [] { return check_analytic_numeric(); },   [] { return check_sharpness(); },
        [] { return check_fna_reduction(); },      [] { return check_enclosure(); },
        [] { return check_one_step_mean_zero(); }, [] { return check_orthogonality(); },
        [] { return check_learner_ordering(); },   [] { return check_quasi_oracle(); },
        [] { return check_gamma_zero_reduction(); }, cli_reproducibility,
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        PropertyResult r;
        try {
            r = criteria[i]();
        } catch (const std::exception& e) {
            r.name = "criterion " + std::to_string(i + 1);
            r.detail = std::string("threw: ") + e.what();
        }
        failed += !r.passed;
        std::cout << std::to_string(i + 1) << ". " << format_result(r) << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
