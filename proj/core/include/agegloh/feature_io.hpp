#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

namespace agegloh {

// GFV1 feature file: "GFV1", u32 LE row count, u32 LE dimension, then
// row-major float32 LE values. Rows follow manifest order.

void write_gfv1(std::ostream& out, const Eigen::MatrixXd& rows);
void write_gfv1(const std::filesystem::path& path, const Eigen::MatrixXd& rows);

Eigen::MatrixXd read_gfv1(std::istream& in);
Eigen::MatrixXd read_gfv1(const std::filesystem::path& path);

}  // namespace agegloh
