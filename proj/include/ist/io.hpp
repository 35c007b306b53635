#ifndef IST_IO_HPP
#define IST_IO_HPP

#include <iosfwd>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "ist/symtensor.hpp"

namespace ist::io {

// Distinct-index tensor text format. First line:
//   ist3 d=<d> field=<real|complex>
// then one line per triple, 0-based strictly increasing labels:
//   <i> <j> <k> <re> [<im>]
// Values are written with %.17g so doubles round-trip exactly.
struct OmegaFile {
    std::variant<OmegaTensor<double>, OmegaTensor<cdouble>> tensor;
    int missing_triples = 0; // defaulted to zero by the reader

    bool is_complex() const { return tensor.index() == 1; }
    int dim() const {
        return is_complex() ? std::get<1>(tensor).dim() : std::get<0>(tensor).dim();
    }
};

OmegaFile read_omega(std::istream& in);
OmegaFile read_omega_file(const std::string& path);

void write_omega(std::ostream& out, const OmegaTensor<double>& t);
void write_omega(std::ostream& out, const OmegaTensor<cdouble>& t);
void write_omega_file(const std::string& path, const OmegaTensor<double>& t);
void write_omega_file(const std::string& path, const OmegaTensor<cdouble>& t);

// Sample matrix: one CSV row per sample, d numeric columns. A non-numeric
// first line is treated as a header.
struct CsvSamples {
    Eigen::MatrixXd samples;
    bool had_header = false;
};

CsvSamples read_csv(std::istream& in);
CsvSamples read_csv_file(const std::string& path);

} // namespace ist::io

#endif
