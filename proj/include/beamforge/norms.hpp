// Discrete norms and error records.
#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "beamforge/field.hpp"

namespace beamforge {

enum class NormKind { l2, energy };

std::string to_string(NormKind k);
NormKind parse_norm_kind(const std::string& s);

// (sum |f|^2 h^n)^{1/2}
double grid_l2(const SampledField& f);

// (eps^2/2 sum (|u_t|^2/c^2 + |grad u|^2) h^n)^{1/2}
double energy_norm(const SampledField& u_t, std::span<const SampledField> grad, double c, double eps);
double energy_norm(const SampledField& u_t, std::span<const SampledField> grad, const SampledField& c, double eps);

struct ErrorRecord {
  double epsilon = 0.0;
  double time = 0.0;
  NormKind kind = NormKind::l2;
  double absolute_error = 0.0;
  double reference_norm = 0.0;
  double relative_error = 0.0;
};

// Uses u for l2 and (u_t, grad) for energy; c is the constant wave speed.
ErrorRecord error_between(const FieldBundle& beam, const FieldBundle& ref, NormKind kind, double c, double eps);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ErrorRecord& r);

}  // namespace beamforge
