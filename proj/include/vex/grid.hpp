#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vex/error.hpp"

namespace vex::gridlab {

// Regular cell-centered grid on an axis-aligned box in R^n, n in {1,2,3}.
// Node i along axis a sits at origin[a] + (i + 1/2) * spacing[a].
// When half_space_axis is set, the box face at coordinate 0 along that axis
// is the boundary of the half-space R^n_+.
class Grid {
public:
    Grid(int dim, std::vector<double> origin, std::vector<double> extent,
         std::vector<int> resolution, std::optional<int> half_space_axis = std::nullopt);

    int dim() const { return dim_; }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<double>& extent() const { return extent_; }
    const std::vector<int>& resolution() const { return resolution_; }
    std::optional<int> half_space_axis() const { return half_space_axis_; }

    double spacing(int axis) const { return extent_[axis] / resolution_[axis]; }
    double cell_volume() const;
    std::size_t node_count() const;

    // Row-major node index, last axis fastest.
    std::size_t index(const std::vector<int>& multi) const;
    std::vector<int> multi_index(std::size_t flat) const;
    std::vector<double> node(std::size_t flat) const;
    double node_coord(std::size_t flat, int axis) const;

    bool same_layout(const Grid& other) const;

private:
    int dim_;
    std::vector<double> origin_;
    std::vector<double> extent_;
    std::vector<int> resolution_;
    std::optional<int> half_space_axis_;
};

using GridPtr = std::shared_ptr<const Grid>;

class ScalarField {
public:
    ScalarField(GridPtr grid, std::vector<double> values);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double max_abs() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// One n-vector per node, stored interleaved: values[i*dim + a].
class VectorField {
public:
    VectorField(GridPtr grid, std::vector<double> values);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double component(std::size_t node, int axis) const {
        return values_[node * grid_->dim() + axis];
    }
    double magnitude(std::size_t node) const;

    ScalarField magnitude_field() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

struct SupportInfo {
    double diameter = 0.0;          // max pairwise distance between support nodes
    ScalarField indicator;          // 1 where |f| exceeds the relative threshold
    double radius_R = 0.0;          // supp f is contained in B(0, radius_R)
};

GridPtr build_grid(int dim, std::vector<double> origin, std::vector<double> extent,
                   std::vector<int> resolution, std::optional<int> half_space_axis = std::nullopt);

// Midpoint quadrature: sum of values times cell volume.
double integrate(const ScalarField& field);

// Central differences at interior nodes, second-order one-sided at boundaries.
// Requires resolution >= 3 along every axis.
VectorField gradient_fd(const ScalarField& field);

struct BumpField {
    ScalarField field;
    SupportInfo support;
};

// Smooth compactly supported bump:
//   x -> exp(-power / (1 - |x-center|^2 / radius^2)) for |x-center| < radius, 0 outside.
BumpField bump_field(const GridPtr& grid, const std::vector<double>& center, double radius,
                     double power);

// Support info for an arbitrary field (relative threshold 1e-14 * max|values|).
SupportInfo support_info(const ScalarField& field);

// Trace of the field on the face x_axis = 0 of a half-space grid, extrapolated
// by a second-order one-sided stencil. The returned field lives on the induced
// (n-1)-dimensional grid.
ScalarField boundary_restrict(const ScalarField& field);

// Pointwise lifts and arithmetic used throughout the harness.
ScalarField map_field(const ScalarField& f, const std::function<double(double)>& fn);
ScalarField combine_fields(const ScalarField& a, const ScalarField& b,
                           const std::function<double(double, double)>& fn);
ScalarField scale_field(const ScalarField& f, double c);
ScalarField constant_field(const GridPtr& grid, double value);

// Serialization: CSV with a header line (dim, origin, extent, resolution,
// half_space_axis) and one value per line in row-major node order, 17
// significant digits. The binary layout mirrors it with raw doubles/int32s.
void save_field_csv(const ScalarField& field, const std::string& path);
ScalarField load_field_csv(const std::string& path);
void save_field_binary(const ScalarField& field, const std::string& path);
ScalarField load_field_binary(const std::string& path);

}  // namespace vex::gridlab
