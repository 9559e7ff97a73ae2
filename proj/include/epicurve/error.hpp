#pragma once

#include <stdexcept>
#include <string>

namespace epicurve {

// Base for every error the library raises. Statistical failure modes
// (non-convergence, low prevalence) are values, not exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define EPICURVE_DEFINE_ERROR(Name) \
    class Name : public Error {     \
    public:                         \
        using Error::Error;         \
    }

// domain
EPICURVE_DEFINE_ERROR(InvalidSeries);
// poisson_glm / logistic_model / calculus
EPICURVE_DEFINE_ERROR(InvalidDegree);
EPICURVE_DEFINE_ERROR(SeriesTooShort);
EPICURVE_DEFINE_ERROR(NotConverged);
EPICURVE_DEFINE_ERROR(NotCumulative);
EPICURVE_DEFINE_ERROR(DegenerateSlope);
EPICURVE_DEFINE_ERROR(DegreeTooLow);
// selection
EPICURVE_DEFINE_ERROR(ZeroVariance);
EPICURVE_DEFINE_ERROR(InvalidConfig);
// ingestion
EPICURVE_DEFINE_ERROR(SourceUnreachable);
EPICURVE_DEFINE_ERROR(MalformedHeader);
EPICURVE_DEFINE_ERROR(EmptyFile);
EPICURVE_DEFINE_ERROR(DuplicateCode);
EPICURVE_DEFINE_ERROR(InvalidPopulation);
EPICURVE_DEFINE_ERROR(DateGap);
EPICURVE_DEFINE_ERROR(NoUnits);
// reporting
EPICURVE_DEFINE_ERROR(MissingOutline);

#undef EPICURVE_DEFINE_ERROR

}  // namespace epicurve
