#include "cdte/learners.hpp"

namespace cdte {

std::string to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::plugin: return "plugin";
        case LearnerKind::iptw: return "iptw";
        case LearnerKind::ca: return "ca";
        case LearnerKind::au: return "au";
    }
    return "?";
}

std::string to_string(Side s) { return s == Side::lower ? "lower" : "upper"; }

std::string to_string(BoundKind k) { return k == BoundKind::cdf ? "cdf" : "quantile"; }

LearnerKind parse_learner(const std::string& s) {
    if (s == "plugin") return LearnerKind::plugin;
    if (s == "iptw") return LearnerKind::iptw;
    if (s == "ca") return LearnerKind::ca;
    if (s == "au") return LearnerKind::au;
    throw std::invalid_argument("unknown learner '" + s + "' (expected plugin, iptw, ca or au)");
}

BoundKind parse_estimand(const std::string& s) {
    if (s == "cdf" || s == "cdf_bounds") return BoundKind::cdf;
    if (s == "quantile" || s == "quantile_bounds") return BoundKind::quantile;
    throw std::invalid_argument("unknown estimand '" + s + "' (expected cdf or quantile)");
}

double default_gamma(BoundKind estimand) { return estimand == BoundKind::cdf ? 0.25 : 0.01; }

double LearnerConfig::effective_gamma() const {
    if (learner == LearnerKind::au) return gamma.value_or(default_gamma(estimand));
    return 0.0;
}

void LearnerConfig::validate() const {
    if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw std::invalid_argument("LearnerConfig: gamma outside [0, 1]");
    if (k_folds < 1) throw std::invalid_argument("LearnerConfig: fold count must be positive");
    if (!(clip_floor > 0.0 && clip_floor < 0.5)) throw std::invalid_argument("LearnerConfig: clip floor outside (0, 0.5)");
    if (!(ridge >= 0.0)) throw std::invalid_argument("LearnerConfig: ridge penalty must be nonnegative");
    if (degree < 0 || degree > 3) throw std::invalid_argument("LearnerConfig: basis degree must be 0..3");
    grid.validate();
}

EvalGrid default_grid(const Dataset& data, Index n_delta, Index n_alpha, Index n_y) {
    double lo[2] = {INFINITY, INFINITY};
    double hi[2] = {-INFINITY, -INFINITY};
    for (Index i = 0; i < data.size(); ++i) {
        lo[data.a(i)] = std::min(lo[data.a(i)], data.y(i));
        hi[data.a(i)] = std::max(hi[data.a(i)], data.y(i));
    }
    if (!std::isfinite(lo[0]) || !std::isfinite(lo[1])) {
        throw std::invalid_argument("default_grid: both treatment arms must be present");
    }
    double d = std::max(std::abs(lo[1] - hi[0]), std::abs(hi[1] - lo[0]));
    if (!(d > 0.0)) d = 1.0;
    const double ymin = std::min(lo[0], lo[1]);
    const double ymax = std::max(hi[0], hi[1]);
    const double pad = ymax > ymin ? 0.1 * (ymax - ymin) : 1.0;
    return EvalGrid::uniform(-1.1 * d, 1.1 * d, n_delta, n_alpha, ymin - pad, ymax + pad, n_y);
}

double correction_cdf_value(int a, double y, double pi, double ystar, double delta, double f1_at, double f0_at,
                            bool active) {
    if (!active) return 0.0;
    if (a == 1) return ((y <= ystar ? 1.0 : 0.0) - f1_at) / pi;
    return -((y <= ystar - delta ? 1.0 : 0.0) - f0_at) / (1.0 - pi);
}

double correction_quantile_value(int a, double y, double pi, double u1, double q1_at, double dens1, double u0,
                                 double q0_at, double dens0, double density_floor) {
    // Influence of a u-quantile: (u - 1{Y <= q}) / f(q).
    if (a == 1) return (u1 - (y <= q1_at ? 1.0 : 0.0)) / std::max(dens1, density_floor) / pi;
    return -(u0 - (y <= q0_at ? 1.0 : 0.0)) / std::max(dens0, density_floor) / (1.0 - pi);
}

namespace {

struct CdfRow {
    GridCdf f1;
    GridCdf f0;
    ConvolutionProfile profile;
};

CdfRow cdf_row(const Vector& x, const NuisanceSource& eta, const EvalGrid& grid) {
    GridCdf f1 = eta.outcome_cdf(1, x, grid.y);
    GridCdf f0 = eta.outcome_cdf(0, x, grid.y);
    ConvolutionProfile p = convolution_profile(f1, f0, grid.delta, grid.y);
    return {std::move(f1), std::move(f0), std::move(p)};
}

struct QuantileRow {
    GridQuantile q1;
    GridQuantile q0;
    QuantileProfile profile;
};

QuantileRow quantile_row(const Vector& x, const NuisanceSource& eta, const EvalGrid& grid) {
    GridQuantile q1 = eta.outcome_quantile(1, x, grid.levels, grid.y);
    GridQuantile q0 = eta.outcome_quantile(0, x, grid.levels, grid.y);
    QuantileProfile p = quantile_profile(q1, q0, grid.alpha, grid.levels);
    return {std::move(q1), std::move(q0), std::move(p)};
}

double clamp_level(const EvalGrid& grid, double u) {
    return std::min(std::max(u, grid.levels(0)), grid.levels(grid.levels.size() - 1));
}

double cdf_correction(const CdfRow& r, int a, double y, double pi, double delta, Index j, Side side) {
    const double ystar = side == Side::lower ? r.profile.sup_arg(j) : r.profile.inf_arg(j);
    const bool active = side == Side::lower ? r.profile.sup_value(j) > 0.0 : r.profile.inf_value(j) < 0.0;
    return correction_cdf_value(a, y, pi, ystar, delta, r.f1(ystar), r.f0(ystar - delta), active);
}

double quantile_correction(const QuantileRow& r, const Vector& x, int a, double y, double pi, double alpha,
                           Index j, Side side, const NuisanceSource& eta, const EvalGrid& grid) {
    const double ustar = side == Side::lower ? r.profile.lower_arg(j) : r.profile.upper_arg(j);
    const double u1 = clamp_level(grid, ustar);
    const double u0 = clamp_level(grid, side == Side::lower ? ustar - alpha : ustar - alpha + 1.0);
    const double q1 = r.q1(u1);
    const double q0 = r.q0(u0);
    // Only the observed arm's density enters the term.
    const double d1 = a == 1 ? eta.outcome_density(1, q1, x) : 1.0;
    const double d0 = a == 0 ? eta.outcome_density(0, q0, x) : 1.0;
    return correction_quantile_value(a, y, pi, u1, q1, d1, u0, q0, d0);
}

void check_x(const Vector& x) {
    if (x.size() < 1 || !detail::all_finite(x)) throw std::invalid_argument("covariate vector must be finite and nonempty");
}

}  // namespace

RowTerms row_terms(const Vector& x, int a, double y, const NuisanceSource& eta, const EvalGrid& grid,
                   BoundKind kind, double clip_floor) {
    check_x(x);
    const double pi = clip_propensity(eta.propensity(x), clip_floor);
    RowTerms t;
    if (kind == BoundKind::cdf) {
        const CdfRow r = cdf_row(x, eta, grid);
        const Index n = grid.delta.size();
        t.plugin_lower = r.profile.sup_value.cwiseMax(0.0);
        t.plugin_upper = (r.profile.inf_value.cwiseMin(0.0).array() + 1.0).matrix();
        t.corr_lower.resize(n);
        t.corr_upper.resize(n);
        for (Index j = 0; j < n; ++j) {
            t.corr_lower(j) = cdf_correction(r, a, y, pi, grid.delta(j), j, Side::lower);
            t.corr_upper(j) = cdf_correction(r, a, y, pi, grid.delta(j), j, Side::upper);
        }
    } else {
        const QuantileRow r = quantile_row(x, eta, grid);
        const Index n = grid.alpha.size();
        t.plugin_lower = r.profile.lower_value;
        t.plugin_upper = r.profile.upper_value;
        t.corr_lower.resize(n);
        t.corr_upper.resize(n);
        for (Index j = 0; j < n; ++j) {
            t.corr_lower(j) = quantile_correction(r, x, a, y, pi, grid.alpha(j), j, Side::lower, eta, grid);
            t.corr_upper(j) = quantile_correction(r, x, a, y, pi, grid.alpha(j), j, Side::upper, eta, grid);
        }
    }
    return t;
}

double correction_term_cdf(const Vector& x, int a, double y, double delta, const NuisanceSource& eta,
                           const EvalGrid& grid, Side side, double clip_floor) {
    check_x(x);
    EvalGrid g = grid;
    g.delta = Vector::Constant(1, delta);
    const CdfRow r = cdf_row(x, eta, g);
    const double pi = clip_propensity(eta.propensity(x), clip_floor);
    return cdf_correction(r, a, y, pi, delta, 0, side);
}

double correction_term_quantile(const Vector& x, int a, double y, double alpha, const NuisanceSource& eta,
                                const EvalGrid& grid, Side side, double clip_floor) {
    check_x(x);
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("correction_term_quantile: alpha outside (0, 1)");
    EvalGrid g = grid;
    g.alpha = Vector::Constant(1, alpha);
    const QuantileRow r = quantile_row(x, eta, g);
    const double pi = clip_propensity(eta.propensity(x), clip_floor);
    return quantile_correction(r, x, a, y, pi, alpha, 0, side, eta, g);
}

BoundsPair plugin_bounds(const NuisanceSource& eta, const Vector& x, const EvalGrid& grid, BoundKind kind) {
    check_x(x);
    if (kind == BoundKind::cdf) {
        const CdfRow r = cdf_row(x, eta, grid);
        return BoundsPair(BoundKind::cdf, grid.delta, r.profile.sup_value.cwiseMax(0.0),
                          (r.profile.inf_value.cwiseMin(0.0).array() + 1.0).matrix());
    }
    QuantileRow r = quantile_row(x, eta, grid);
    return BoundsPair(BoundKind::quantile, grid.alpha, std::move(r.profile.lower_value),
                      std::move(r.profile.upper_value));
}

namespace {

CondCdfModel reweighted_arm(const Dataset& data, const FoldNuisance& fold, int arm, double clip_floor) {
    std::vector<Index> rows;
    for (Index i : fold.training_rows()) {
        if (data.a(i) == arm) rows.push_back(i);
    }
    const Dataset sub = data.subset(rows);
    Vector w(sub.size());
    for (Index r = 0; r < sub.size(); ++r) {
        const double p1 = clip_propensity(fold.propensity(sub.x(r)), clip_floor);
        w(r) = 1.0 / (arm == 1 ? p1 : 1.0 - p1);
    }
    const CondCdfModel& base = fold.arm_model(arm);
    Vector h = base.method() == CdfMethod::kernel_empirical ? base.bandwidth() : scott_bandwidth(sub.covariates());
    return CondCdfModel::kernel(arm, sub.covariates(), sub.outcome(), std::move(w), std::move(h));
}

FoldNuisance reweighted_fold(const Dataset& data, const FoldNuisance& fold, double clip_floor) {
    return FoldNuisance(fold.propensity_model(), reweighted_arm(data, fold, 0, clip_floor),
                        reweighted_arm(data, fold, 1, clip_floor), fold.training_rows());
}

}  // namespace

NuisanceFit iptw_reweight(const Dataset& data, const NuisanceFit& fit, double clip_floor) {
    std::vector<FoldNuisance> folds;
    for (const FoldNuisance& f : fit.folds) folds.push_back(reweighted_fold(data, f, clip_floor));
    return NuisanceFit{fit.plan, std::move(folds), reweighted_fold(data, fit.full, clip_floor)};
}

SurfacePair pseudo_surface(const Dataset& data, const SourceForRow& source, const LearnerConfig& config) {
    config.validate();
    const double gamma = config.effective_gamma();
    const Vector& grid = config.estimand == BoundKind::cdf ? config.grid.delta : config.grid.alpha;
    const Index n = data.size();
    SurfacePair s{{config.estimand, Side::lower, grid, Matrix(n, grid.size())},
                  {config.estimand, Side::upper, grid, Matrix(n, grid.size())}};
    for (Index i = 0; i < n; ++i) {
        const Vector x = data.x(i);
        const RowTerms t = row_terms(x, data.a(i), data.y(i), source(i), config.grid, config.estimand, config.clip_floor);
        if (gamma == 0.0) {
            s.lower.values.row(i) = t.plugin_lower.transpose();
            s.upper.values.row(i) = t.plugin_upper.transpose();
        } else {
            s.lower.values.row(i) = (t.plugin_lower + gamma * t.corr_lower).transpose();
            s.upper.values.row(i) = (t.plugin_upper + gamma * t.corr_upper).transpose();
        }
    }
    return s;
}

SurfacePair pseudo_surface(const Dataset& data, const NuisanceFit& fit, const LearnerConfig& config) {
    if (fit.plan.fold_of_row.size() != data.size()) throw std::invalid_argument("pseudo_surface: fit/data size mismatch");
    return pseudo_surface(
        data, [&fit](Index i) -> const NuisanceSource& { return fit.for_row(i); }, config);
}

SurfacePair pseudo_surface(const Dataset& data, const NuisanceSource& oracle, const LearnerConfig& config) {
    return pseudo_surface(
        data, [&oracle](Index) -> const NuisanceSource& { return oracle; }, config);
}

FeatureMap::FeatureMap(Vector center, Vector scale, int degree)
    : center_(std::move(center)), scale_(std::move(scale)), degree_(degree) {
    if (center_.size() != scale_.size() || (scale_.array() <= 0.0).any()) {
        throw std::invalid_argument("FeatureMap: center/scale mismatch or nonpositive scale");
    }
    if (degree_ < 0 || degree_ > 3) throw std::invalid_argument("FeatureMap: degree must be 0..3");
}

FeatureMap FeatureMap::fit(const Matrix& x, int degree) {
    const Index n = x.rows();
    if (n < 1) throw std::invalid_argument("FeatureMap: no rows");
    Vector c = x.colwise().mean().transpose();
    Vector s(x.cols());
    for (Index k = 0; k < x.cols(); ++k) {
        const double sd = n > 1 ? std::sqrt((x.col(k).array() - c(k)).square().sum() / double(n - 1)) : 0.0;
        s(k) = sd > 0.0 ? sd : 1.0;
    }
    return FeatureMap(std::move(c), std::move(s), degree);
}

namespace {

// Monomials of total degree `left` in variables first..d-1, multiplied by `acc`.
void monomials(const Vector& z, Index first, int left, double acc, std::vector<double>& out) {
    if (left == 0) {
        out.push_back(acc);
        return;
    }
    for (Index k = first; k < z.size(); ++k) monomials(z, k, left - 1, acc * z(k), out);
}

}  // namespace

Vector FeatureMap::operator()(const Vector& x) const {
    if (x.size() != center_.size()) throw std::invalid_argument("FeatureMap: covariate length mismatch");
    const Vector z = ((x - center_).array() / scale_.array()).matrix();
    std::vector<double> f;
    for (int deg = 0; deg <= degree_; ++deg) monomials(z, 0, deg, 1.0, f);
    return Eigen::Map<Vector>(f.data(), Index(f.size()));
}

Index FeatureMap::size() const { return (*this)(center_).size(); }

Matrix FeatureMap::design(const Matrix& x) const {
    Matrix d(x.rows(), size());
    for (Index i = 0; i < x.rows(); ++i) d.row(i) = (*this)(x.row(i).transpose()).transpose();
    return d;
}

WorkingModel::WorkingModel(BoundKind kind, Side side, Vector grid, FeatureMap features, Matrix coef)
    : kind_(kind), side_(side), grid_(std::move(grid)), features_(std::move(features)), coef_(std::move(coef)) {
    if (coef_.cols() != grid_.size() || coef_.rows() != features_.size()) {
        throw std::invalid_argument("WorkingModel: coefficient shape does not match features x grid");
    }
}

Vector WorkingModel::predict_raw(const Vector& x) const { return coef_.transpose() * features_(x); }

Vector WorkingModel::predict(const Vector& x) const {
    const Vector raw = predict_raw(x);
    return kind_ == BoundKind::cdf ? project_cdf_values(raw) : isotonic_fit(raw);
}

WorkingModel fit_second_stage(const PseudoSurface& surface, const Matrix& covariates, double ridge, int degree) {
    const Index n = surface.values.rows();
    if (n == 0) throw std::invalid_argument("fit_second_stage: no rows");
    if (covariates.rows() != n) throw std::invalid_argument("fit_second_stage: surface and covariates not row-aligned");
    if (surface.values.cols() != surface.grid.size()) throw std::invalid_argument("fit_second_stage: surface/grid mismatch");
    if (!detail::all_finite(surface.values.reshaped())) throw std::invalid_argument("fit_second_stage: non-finite surface");
    if (!(ridge >= 0.0)) throw std::invalid_argument("fit_second_stage: ridge penalty must be nonnegative");
    FeatureMap fm = FeatureMap::fit(covariates, degree);
    const Matrix phi = fm.design(covariates);
    Matrix gram = phi.transpose() * phi;
    gram.diagonal().tail(gram.rows() - 1).array() += ridge;
    // A tiny jitter on the intercept keeps the system solvable without ridge.
    gram(0, 0) += 1e-12;
    Matrix coef = gram.ldlt().solve(phi.transpose() * surface.values);
    return WorkingModel(surface.kind, surface.side, surface.grid, std::move(fm), std::move(coef));
}

Vector loss_weights(const PseudoSurface& surface) {
    return surface.kind == BoundKind::cdf ? Vector(crps_weights(surface.grid)) : Vector(w2_weights(surface.grid));
}

Vector column_losses(const WorkingModel& model, const PseudoSurface& surface, const Matrix& covariates) {
    if (covariates.rows() != surface.values.rows()) throw std::invalid_argument("column_losses: row mismatch");
    const Matrix fitted = model.features().design(covariates) * model.coef();
    return (surface.values - fitted).array().square().colwise().mean().transpose();
}

double empirical_loss(const WorkingModel& model, const PseudoSurface& surface, const Matrix& covariates) {
    if (covariates.rows() != surface.values.rows()) throw std::invalid_argument("empirical_loss: row mismatch");
    const Vector w = loss_weights(surface);
    const Matrix fitted = model.features().design(covariates) * model.coef();
    const Matrix r = surface.values - fitted;
    double total = 0.0;
    for (Index i = 0; i < r.rows(); ++i) total += (r.row(i).transpose().array().square() * w.array()).sum();
    return total / double(r.rows());
}

BoundsPrediction combine_bounds(BoundKind kind, const Vector& grid, Vector lower, Vector upper) {
    int crossings = 0;
    for (Index j = 0; j < grid.size(); ++j) {
        const bool crossed = kind == BoundKind::cdf ? lower(j) > upper(j) : upper(j) > lower(j);
        if (crossed) {
            std::swap(lower(j), upper(j));
            ++crossings;
        }
    }
    return {BoundsPair(kind, grid, std::move(lower), std::move(upper)), crossings};
}

BoundsPrediction predict_bounds(const WorkingModel& lower, const WorkingModel& upper, const Vector& x) {
    if (lower.kind() != upper.kind()) throw std::invalid_argument("predict_bounds: estimand kind mismatch");
    if (lower.grid().size() != upper.grid().size() || lower.grid() != upper.grid()) {
        throw std::invalid_argument("predict_bounds: models use different grids");
    }
    return combine_bounds(lower.kind(), lower.grid(), lower.predict(x), upper.predict(x));
}

BoundsPrediction FittedLearner::predict(const Vector& x) const {
    if (lower_) return predict_bounds(*lower_, *upper_, x);
    const NuisanceSource& eta = oracle_ ? *oracle_ : static_cast<const NuisanceSource&>(fit_->full);
    return {plugin_bounds(eta, x, config_.grid, config_.estimand), 0};
}

BoundsPrediction FittedLearner::predict_training_row(const Dataset& train, Index i) const {
    if (lower_ || oracle_) return predict(train.x(i));
    if (fit_->plan.fold_of_row.size() != train.size()) {
        throw std::invalid_argument("predict_training_row: dataset is not the training set");
    }
    return {plugin_bounds(fit_->for_row(i), train.x(i), config_.grid, config_.estimand), 0};
}

namespace {

void fit_stage_two(std::optional<WorkingModel>& lower, std::optional<WorkingModel>& upper, const SurfacePair& s,
                   const Dataset& data, const LearnerConfig& config) {
    lower = fit_second_stage(s.lower, data.covariates(), config.ridge, config.degree);
    upper = fit_second_stage(s.upper, data.covariates(), config.ridge, config.degree);
}

}  // namespace

FittedLearner fit_learner(const Dataset& data, const LearnerConfig& config, const NuisanceOptions& options) {
    config.validate();
    NuisanceOptions opts = options;
    opts.clip_floor = config.clip_floor;
    auto fit = std::make_shared<NuisanceFit>(cross_fit(data, config.k_folds, opts));
    if (config.learner == LearnerKind::iptw) {
        fit = std::make_shared<NuisanceFit>(iptw_reweight(data, *fit, config.clip_floor));
    }
    FittedLearner out;
    out.config_ = config;
    if (config.learner == LearnerKind::ca || config.learner == LearnerKind::au) {
        fit_stage_two(out.lower_, out.upper_, pseudo_surface(data, *fit, config), data, config);
    }
    out.fit_ = std::move(fit);
    return out;
}

FittedLearner fit_learner_oracle(const Dataset& data, const LearnerConfig& config,
                                 std::shared_ptr<const NuisanceSource> oracle) {
    config.validate();
    if (!oracle) throw std::invalid_argument("fit_learner_oracle: null nuisance source");
    if (config.learner == LearnerKind::iptw) throw std::invalid_argument("fit_learner_oracle: iptw needs estimated nuisances");
    FittedLearner out;
    out.config_ = config;
    if (config.learner == LearnerKind::ca || config.learner == LearnerKind::au) {
        fit_stage_two(out.lower_, out.upper_, pseudo_surface(data, *oracle, config), data, config);
    }
    out.oracle_ = std::move(oracle);
    return out;
}

}  // namespace cdte
