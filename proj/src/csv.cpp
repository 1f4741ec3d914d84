#include "cdte/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cdte {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const std::size_t b = field.find_first_not_of(" \t");
        const std::size_t e = field.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& s, const std::string& source, std::size_t line, const std::string& column) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != last) fail(source, line, "column '" + column + "' is not a number: '" + s + "'");
    if (!std::isfinite(v)) fail(source, line, "column '" + column + "' is not finite");
    return v;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        header = split_fields(line);
        break;
    }
    if (header.size() < 3) fail(source, line_no, "header must be x1,...,xd,a,y");
    const std::size_t d = header.size() - 2;
    for (std::size_t k = 0; k < d; ++k) {
        if (header[k] != "x" + std::to_string(k + 1)) fail(source, line_no, "header column " + std::to_string(k + 1) + " must be 'x" + std::to_string(k + 1) + "'");
    }
    if (header[d] != "a" || header[d + 1] != "y") fail(source, line_no, "header must end with 'a,y'");

    std::vector<double> xs;
    std::vector<int> as;
    std::vector<double> ys;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_fields(line);
        if (f.size() != header.size()) {
            fail(source, line_no, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
        }
        for (std::size_t k = 0; k < d; ++k) xs.push_back(parse_number(f[k], source, line_no, header[k]));
        if (f[d] != "0" && f[d] != "1") fail(source, line_no, "treatment 'a' must be 0 or 1, found '" + f[d] + "'");
        as.push_back(f[d] == "1" ? 1 : 0);
        ys.push_back(parse_number(f[d + 1], source, line_no, "y"));
    }
    const Index n = Index(ys.size());
    if (n == 0) fail(source, line_no, "no data rows");
    Matrix x(n, Index(d));
    Eigen::VectorXi a(n);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < Index(d); ++k) x(i, k) = xs[std::size_t(i) * d + std::size_t(k)];
        a(i) = as[std::size_t(i)];
        y(i) = ys[std::size_t(i)];
    }
    return Dataset(std::move(x), std::move(a), std::move(y));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path) { return parse_dataset_csv(read_file(path), path); }

std::string dataset_to_csv(const Dataset& data) {
    std::string s;
    for (Index k = 0; k < data.dim(); ++k) s += "x" + std::to_string(k + 1) + ",";
    s += "a,y\n";
    for (Index i = 0; i < data.size(); ++i) {
        for (Index k = 0; k < data.dim(); ++k) s += format_double(data.covariates()(i, k)) + ",";
        s += std::to_string(data.a(i)) + "," + format_double(data.y(i)) + "\n";
    }
    return s;
}

std::string metrics_to_csv(const MetricsReport& report) {
    std::string s = "seed,n_train,learner,side,estimand,rcrps_in,rcrps_out,w2_in,w2_out\n";
    for (const MetricsRow& r : report.rows) {
        s += std::to_string(r.seed) + "," + std::to_string(r.n_train) + "," + r.learner + "," + to_string(r.side) + "," +
             to_string(r.estimand) + "," + format_double(r.rcrps_in) + "," + format_double(r.rcrps_out) + "," +
             format_double(r.w2_in) + "," + format_double(r.w2_out) + "\n";
    }
    return s;
}

std::string bounds_to_csv(const std::vector<BoundsRow>& rows) {
    std::string s = "row_id,grid_value,lower,upper\n";
    for (const BoundsRow& r : rows) {
        s += std::to_string(r.row_id) + "," + format_double(r.grid_value) + "," + format_double(r.lower) + "," +
             format_double(r.upper) + "\n";
    }
    return s;
}

}  // namespace cdte
