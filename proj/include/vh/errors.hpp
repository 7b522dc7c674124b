#pragma once

#include <stdexcept>
#include <string>

namespace vh {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define VH_DEFINE_ERROR(Name)                 \
    struct Name : Error {                     \
        using Error::Error;                   \
    }

// lexicon
VH_DEFINE_ERROR(MalformedRow);
VH_DEFINE_ERROR(UnknownSegmentClass);
VH_DEFINE_ERROR(EmptyLexicon);
VH_DEFINE_ERROR(InsufficientData);
VH_DEFINE_ERROR(BadSpec);

// numerics
VH_DEFINE_ERROR(DimensionMismatch);
VH_DEFINE_ERROR(EmptySupport);
VH_DEFINE_ERROR(TargetOffSupport);
VH_DEFINE_ERROR(CacheMismatch);
VH_DEFINE_ERROR(NonFiniteGradient);
VH_DEFINE_ERROR(NonFiniteInput);
VH_DEFINE_ERROR(BadEpsilon);

// plm
VH_DEFINE_ERROR(UnknownSegment);
VH_DEFINE_ERROR(NonFiniteLoss);

// surprisal
VH_DEFINE_ERROR(NonPositiveProbability);
VH_DEFINE_ERROR(EmptyGroup);
VH_DEFINE_ERROR(ZeroMass);
VH_DEFINE_ERROR(NoPrecedingVowel);
VH_DEFINE_ERROR(EmptySampleList);
VH_DEFINE_ERROR(SchemeInventoryMismatch);

// stats
VH_DEFINE_ERROR(TooFewSamples);
VH_DEFINE_ERROR(DegenerateSample);
VH_DEFINE_ERROR(AllZeroDifferences);
VH_DEFINE_ERROR(LengthMismatch);
VH_DEFINE_ERROR(EmptySample);
VH_DEFINE_ERROR(OutOfRangeStatistic);
VH_DEFINE_ERROR(ZeroRankSum);

// report
VH_DEFINE_ERROR(IoFailure);
VH_DEFINE_ERROR(EmptyTable);
VH_DEFINE_ERROR(EmptySamples);

#undef VH_DEFINE_ERROR

}  // namespace vh
