#pragma once

#include <stdexcept>
#include <string>

namespace mmlab {

// Every failure mode the library reports, one code per condition.
enum class Errc {
    // marketdata
    missing_field,
    non_monotone_time,
    crossed_book,
    malformed_number,
    zero_depth,
    insufficient_sessions,
    // env
    series_too_short,
    stepped_past_end,
    insufficient_history,
    // mdp
    singular_system,
    // dqn
    dimension_mismatch,
    shape_mismatch,
    empty_batch,
    bad_checkpoint,
    // eval
    zero_variance,
    too_few_days,
    zero_trades,
    no_checkpoints,
    // pdp
    empty_log,
    bad_range,
    // cli / config
    bad_config,
};

inline const char* to_string(Errc c) {
    switch (c) {
        case Errc::missing_field: return "MissingField";
        case Errc::non_monotone_time: return "NonMonotoneTime";
        case Errc::crossed_book: return "CrossedBook";
        case Errc::malformed_number: return "MalformedNumber";
        case Errc::zero_depth: return "ZeroDepth";
        case Errc::insufficient_sessions: return "InsufficientSessions";
        case Errc::series_too_short: return "SeriesTooShort";
        case Errc::stepped_past_end: return "SteppedPastEnd";
        case Errc::insufficient_history: return "InsufficientHistory";
        case Errc::singular_system: return "SingularSystem";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::empty_batch: return "EmptyBatch";
        case Errc::bad_checkpoint: return "BadCheckpoint";
        case Errc::zero_variance: return "ZeroVariance";
        case Errc::too_few_days: return "TooFewDays";
        case Errc::zero_trades: return "ZeroTrades";
        case Errc::no_checkpoints: return "NoCheckpoints";
        case Errc::empty_log: return "EmptyLog";
        case Errc::bad_range: return "BadRange";
        case Errc::bad_config: return "BadConfig";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace mmlab
