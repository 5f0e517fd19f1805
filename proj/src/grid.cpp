#include "vex/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vex::gridlab {

namespace {

void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(what) + " contains a non-finite value");
    }
}

}  // namespace

Grid::Grid(int dim, std::vector<double> origin, std::vector<double> extent,
           std::vector<int> resolution, std::optional<int> half_space_axis)
    : dim_(dim),
      origin_(std::move(origin)),
      extent_(std::move(extent)),
      resolution_(std::move(resolution)),
      half_space_axis_(half_space_axis) {
    if (dim_ < 1 || dim_ > 3) fail(ErrorCode::UnsupportedDimension, "dim must be 1, 2 or 3");
    if (static_cast<int>(origin_.size()) != dim_ || static_cast<int>(extent_.size()) != dim_ ||
        static_cast<int>(resolution_.size()) != dim_)
        fail(ErrorCode::InvalidArgument, "origin/extent/resolution length must equal dim");
    for (int a = 0; a < dim_; ++a) {
        if (!(extent_[a] > 0.0)) fail(ErrorCode::InvalidArgument, "extent must be positive");
        if (resolution_[a] < 1) fail(ErrorCode::InvalidArgument, "resolution must be positive");
        if (!std::isfinite(origin_[a]) || !std::isfinite(extent_[a]))
            fail(ErrorCode::InvalidArgument, "grid box must be finite");
    }
    if (half_space_axis_) {
        int a = *half_space_axis_;
        if (a < 0 || a >= dim_) fail(ErrorCode::InvalidArgument, "half_space_axis out of range");
        if (std::abs(origin_[a]) > 1e-12 * std::max(1.0, extent_[a]))
            fail(ErrorCode::InvalidArgument, "half-space grid must have its boundary face at coordinate 0");
    }
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
}

std::size_t Grid::node_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dim_; ++a) n *= static_cast<std::size_t>(resolution_[a]);
    return n;
}

std::size_t Grid::index(const std::vector<int>& multi) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim_; ++a) flat = flat * resolution_[a] + multi[a];
    return flat;
}

std::vector<int> Grid::multi_index(std::size_t flat) const {
    std::vector<int> multi(dim_);
    for (int a = dim_ - 1; a >= 0; --a) {
        multi[a] = static_cast<int>(flat % resolution_[a]);
        flat /= resolution_[a];
    }
    return multi;
}

std::vector<double> Grid::node(std::size_t flat) const {
    std::vector<int> multi = multi_index(flat);
    std::vector<double> x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + (multi[a] + 0.5) * spacing(a);
    return x;
}

double Grid::node_coord(std::size_t flat, int axis) const {
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= resolution_[a];
    int i = static_cast<int>((flat / stride) % resolution_[axis]);
    return origin_[axis] + (i + 0.5) * spacing(axis);
}

bool Grid::same_layout(const Grid& other) const {
    return dim_ == other.dim_ && origin_ == other.origin_ && extent_ == other.extent_ &&
           resolution_ == other.resolution_;
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) fail(ErrorCode::InvalidArgument, "ScalarField requires a grid");
    if (values_.size() != grid_->node_count())
        fail(ErrorCode::InvalidArgument, "ScalarField value count does not match grid");
    check_finite(values_, "ScalarField");
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

VectorField::VectorField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) fail(ErrorCode::InvalidArgument, "VectorField requires a grid");
    if (values_.size() != grid_->node_count() * static_cast<std::size_t>(grid_->dim()))
        fail(ErrorCode::InvalidArgument, "VectorField value count does not match grid");
    check_finite(values_, "VectorField");
}

double VectorField::magnitude(std::size_t node) const {
    double s = 0.0;
    for (int a = 0; a < grid_->dim(); ++a) {
        double c = component(node, a);
        s += c * c;
    }
    return std::sqrt(s);
}

ScalarField VectorField::magnitude_field() const {
    std::vector<double> out(grid_->node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = magnitude(i);
    return ScalarField(grid_, std::move(out));
}

GridPtr build_grid(int dim, std::vector<double> origin, std::vector<double> extent,
                   std::vector<int> resolution, std::optional<int> half_space_axis) {
    return std::make_shared<const Grid>(dim, std::move(origin), std::move(extent),
                                        std::move(resolution), half_space_axis);
}

double integrate(const ScalarField& field) {
    double sum = 0.0;
    for (double v : field.values()) sum += v;
    return sum * field.grid().cell_volume();
}

VectorField gradient_fd(const ScalarField& field) {
    const Grid& g = field.grid();
    const int dim = g.dim();
    for (int a = 0; a < dim; ++a)
        if (g.resolution()[a] < 3)
            fail(ErrorCode::GridTooCoarse, "gradient_fd needs resolution >= 3 per axis");

    const std::size_t count = g.node_count();
    std::vector<double> out(count * dim, 0.0);
    const auto& v = field.values();

    for (int a = 0; a < dim; ++a) {
        std::size_t stride = 1;
        for (int b = dim - 1; b > a; --b) stride *= g.resolution()[b];
        const int res = g.resolution()[a];
        const double h = g.spacing(a);
        for (std::size_t i = 0; i < count; ++i) {
            int ia = static_cast<int>((i / stride) % res);
            double d;
            if (ia == 0) {
                d = (-3.0 * v[i] + 4.0 * v[i + stride] - v[i + 2 * stride]) / (2.0 * h);
            } else if (ia == res - 1) {
                d = (3.0 * v[i] - 4.0 * v[i - stride] + v[i - 2 * stride]) / (2.0 * h);
            } else {
                d = (v[i + stride] - v[i - stride]) / (2.0 * h);
            }
            out[i * dim + a] = d;
        }
    }
    return VectorField(field.grid_ptr(), std::move(out));
}

SupportInfo support_info(const ScalarField& field) {
    const Grid& g = field.grid();
    const double threshold = 1e-14 * field.max_abs();
    std::vector<double> indicator(field.size(), 0.0);
    std::vector<std::size_t> support_nodes;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (std::abs(field[i]) > threshold) {
            indicator[i] = 1.0;
            support_nodes.push_back(i);
        }
    }
    SupportInfo info{0.0, ScalarField(field.grid_ptr(), std::move(indicator)), 0.0};
    double diam2 = 0.0;
    double r2 = 0.0;
    std::vector<std::vector<double>> pts;
    pts.reserve(support_nodes.size());
    for (std::size_t i : support_nodes) pts.push_back(g.node(i));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double n2 = 0.0;
        for (double c : pts[i]) n2 += c * c;
        r2 = std::max(r2, n2);
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double d2 = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                double d = pts[i][a] - pts[j][a];
                d2 += d * d;
            }
            diam2 = std::max(diam2, d2);
        }
    }
    info.diameter = std::sqrt(diam2);
    info.radius_R = std::sqrt(r2);
    return info;
}

BumpField bump_field(const GridPtr& grid, const std::vector<double>& center, double radius,
                     double power) {
    const Grid& g = *grid;
    if (static_cast<int>(center.size()) != g.dim())
        fail(ErrorCode::InvalidArgument, "bump center dimension mismatch");
    if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "bump radius must be positive");
    for (int a = 0; a < g.dim(); ++a) {
        double lo = g.origin()[a];
        double hi = g.origin()[a] + g.extent()[a];
        // crossing the half-space boundary face is allowed: the grid truncates
        // the bump there, which is exactly the trace-test geometry
        bool truncated_face = g.half_space_axis() && *g.half_space_axis() == a;
        if ((center[a] - radius < lo - 1e-12 && !truncated_face) ||
            center[a] + radius > hi + 1e-12)
            fail(ErrorCode::SupportEscape, "bump ball exits the grid box");
    }
    std::vector<double> values(g.node_count(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double t2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            double d = (g.node_coord(i, a) - center[a]) / radius;
            t2 += d * d;
        }
        if (t2 < 1.0) values[i] = std::exp(-power / (1.0 - t2));
    }
    ScalarField field(grid, std::move(values));
    SupportInfo info = support_info(field);
    // analytic containment bound; the measured values stay below these
    double cnorm = 0.0;
    for (double c : center) cnorm += c * c;
    info.radius_R = std::sqrt(cnorm) + radius;
    return BumpField{std::move(field), std::move(info)};
}

ScalarField boundary_restrict(const ScalarField& field) {
    const Grid& g = field.grid();
    if (!g.half_space_axis()) fail(ErrorCode::NotAHalfSpace, "boundary_restrict needs a half-space grid");
    const int axis = *g.half_space_axis();
    if (g.dim() < 2) fail(ErrorCode::UnsupportedDimension, "boundary of a 1D grid is not a grid");
    if (g.resolution()[axis] < 3) fail(ErrorCode::GridTooCoarse, "need >= 3 nodes along the half-space axis");

    std::vector<double> b_origin, b_extent;
    std::vector<int> b_res;
    for (int a = 0; a < g.dim(); ++a) {
        if (a == axis) continue;
        b_origin.push_back(g.origin()[a]);
        b_extent.push_back(g.extent()[a]);
        b_res.push_back(g.resolution()[a]);
    }
    GridPtr bgrid = build_grid(g.dim() - 1, b_origin, b_extent, b_res);

    std::size_t stride = 1;
    for (int b = g.dim() - 1; b > axis; --b) stride *= g.resolution()[b];

    const auto& v = field.values();
    std::vector<double> out(bgrid->node_count());
    for (std::size_t bi = 0; bi < out.size(); ++bi) {
        auto bmulti = bgrid->multi_index(bi);
        std::vector<int> multi(g.dim());
        int k = 0;
        for (int a = 0; a < g.dim(); ++a) multi[a] = (a == axis) ? 0 : bmulti[k++];
        std::size_t i0 = g.index(multi);
        // quadratic extrapolation from nodes at h/2, 3h/2, 5h/2 to the face x=0
        out[bi] = 1.875 * v[i0] - 1.25 * v[i0 + stride] + 0.375 * v[i0 + 2 * stride];
    }
    return ScalarField(bgrid, std::move(out));
}

ScalarField map_field(const ScalarField& f, const std::function<double(double)>& fn) {
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(f[i]);
    return ScalarField(f.grid_ptr(), std::move(out));
}

ScalarField combine_fields(const ScalarField& a, const ScalarField& b,
                           const std::function<double(double, double)>& fn) {
    if (!a.grid().same_layout(b.grid()))
        fail(ErrorCode::IncompatibleGrids, "fields live on different grids");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i], b[i]);
    return ScalarField(a.grid_ptr(), std::move(out));
}

ScalarField scale_field(const ScalarField& f, double c) {
    return map_field(f, [c](double v) { return c * v; });
}

ScalarField constant_field(const GridPtr& grid, double value) {
    return ScalarField(grid, std::vector<double>(grid->node_count(), value));
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_field_csv(const ScalarField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
    const Grid& g = field.grid();
    out << "dim," << g.dim() << "\n";
    auto row = [&](const char* name, auto get, int count) {
        out << name;
        for (int a = 0; a < count; ++a) out << "," << get(a);
        out << "\n";
    };
    row("origin", [&](int a) { return format_double(g.origin()[a]); }, g.dim());
    row("extent", [&](int a) { return format_double(g.extent()[a]); }, g.dim());
    row("resolution", [&](int a) { return std::to_string(g.resolution()[a]); }, g.dim());
    out << "half_space_axis," << (g.half_space_axis() ? std::to_string(*g.half_space_axis()) : "none")
        << "\n";
    for (double v : field.values()) out << format_double(v) << "\n";
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

ScalarField load_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    auto next_tokens = [&](const std::string& expect) {
        std::string line;
        if (!std::getline(in, line)) fail(ErrorCode::IoError, "truncated field file " + path);
        std::vector<std::string> toks;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) toks.push_back(tok);
        if (toks.empty() || toks[0] != expect)
            fail(ErrorCode::IoError, "expected '" + expect + "' row in " + path);
        return std::vector<std::string>(toks.begin() + 1, toks.end());
    };
    int dim = std::stoi(next_tokens("dim").at(0));
    auto to_doubles = [](const std::vector<std::string>& t) {
        std::vector<double> out;
        for (const auto& s : t) out.push_back(std::stod(s));
        return out;
    };
    std::vector<double> origin = to_doubles(next_tokens("origin"));
    std::vector<double> extent = to_doubles(next_tokens("extent"));
    std::vector<int> resolution;
    for (const auto& s : next_tokens("resolution")) resolution.push_back(std::stoi(s));
    std::string hs = next_tokens("half_space_axis").at(0);
    std::optional<int> axis;
    if (hs != "none") axis = std::stoi(hs);
    GridPtr grid = build_grid(dim, origin, extent, resolution, axis);
    std::vector<double> values;
    values.reserve(grid->node_count());
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) values.push_back(std::stod(line));
    }
    return ScalarField(grid, std::move(values));
}

void save_field_binary(const ScalarField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
    const Grid& g = field.grid();
    auto put_i32 = [&](std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_i32(g.dim());
    for (int a = 0; a < g.dim(); ++a) put_f64(g.origin()[a]);
    for (int a = 0; a < g.dim(); ++a) put_f64(g.extent()[a]);
    for (int a = 0; a < g.dim(); ++a) put_i32(g.resolution()[a]);
    put_i32(g.half_space_axis() ? *g.half_space_axis() : -1);
    for (double v : field.values()) put_f64(v);
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

ScalarField load_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    auto get_i32 = [&] {
        std::int32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_f64 = [&] {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    int dim = get_i32();
    if (dim < 1 || dim > 3) fail(ErrorCode::IoError, "corrupt field file " + path);
    std::vector<double> origin(dim), extent(dim);
    std::vector<int> resolution(dim);
    for (int a = 0; a < dim; ++a) origin[a] = get_f64();
    for (int a = 0; a < dim; ++a) extent[a] = get_f64();
    for (int a = 0; a < dim; ++a) resolution[a] = get_i32();
    int axis = get_i32();
    GridPtr grid = build_grid(dim, origin, extent, resolution,
                              axis >= 0 ? std::optional<int>(axis) : std::nullopt);
    std::vector<double> values(grid->node_count());
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
    if (!in) fail(ErrorCode::IoError, "truncated field file " + path);
    return ScalarField(grid, std::move(values));
}

}  // namespace vex::gridlab
