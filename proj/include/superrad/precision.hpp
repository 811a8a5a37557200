#pragma once

// Extended and quad complex scalars for the closed-form two-atom algebra.

#include <complex>

#include <boost/multiprecision/complex128.hpp>

namespace superrad {

using ExtComplex = std::complex<long double>;
using QuadComplex = boost::multiprecision::complex128;

enum class Precision { extended, quad };

template <class C>
std::complex<double> to_cdouble(const C& z) {
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

}  // namespace superrad
