#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace galc {

enum class Errc {
    invalid_shape,
    invalid_range,
    shape_mismatch,
    not_scalar,
    geometry_mismatch,
    io_error,
    version_mismatch,
    corrupt_manifest,
    empty_batch,
    empty_dataset,
    too_few_samples,
    not_symmetric,
    no_convergence,
    dimension_mismatch,
    division_by_zero,
    missing_class_directory,
    mixed_geometry,
    unreadable_file,
    class_too_small,
    missing_generator,
    single_class_dataset,
    config_parse,
    numeric_failure,
};

inline std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::invalid_shape: return "invalid-shape";
        case Errc::invalid_range: return "invalid-range";
        case Errc::shape_mismatch: return "shape-mismatch";
        case Errc::not_scalar: return "not-scalar";
        case Errc::geometry_mismatch: return "geometry-mismatch";
        case Errc::io_error: return "io-error";
        case Errc::version_mismatch: return "version-mismatch";
        case Errc::corrupt_manifest: return "corrupt-manifest";
        case Errc::empty_batch: return "empty-batch";
        case Errc::empty_dataset: return "empty-dataset";
        case Errc::too_few_samples: return "too-few-samples";
        case Errc::not_symmetric: return "not-symmetric";
        case Errc::no_convergence: return "no-convergence";
        case Errc::dimension_mismatch: return "dimension-mismatch";
        case Errc::division_by_zero: return "division-by-zero";
        case Errc::missing_class_directory: return "missing-class-directory";
        case Errc::mixed_geometry: return "mixed-geometry";
        case Errc::unreadable_file: return "unreadable-file";
        case Errc::class_too_small: return "class-too-small";
        case Errc::missing_generator: return "missing-generator-for-class";
        case Errc::single_class_dataset: return "single-class-dataset";
        case Errc::config_parse: return "config-parse-error";
        case Errc::numeric_failure: return "numeric-failure";
    }
    return "unknown";
}

/// Exception carrying a machine-checkable error kind alongside the message.
class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), message_(what) {}

    Errc code() const noexcept { return code_; }
    /// The description without the error-kind prefix.
    const std::string& message() const noexcept { return message_; }

   private:
    Errc code_;
    std::string message_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace galc
