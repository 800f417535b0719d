#pragma once

#include "psrdet/geo.hpp"

namespace psrdet {

enum class AttackKind { Targeted, Regional };

const char* to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& s);

// Admissible parameter ranges for sampled attacks.
struct AttackRanges {
    double duration_min_s = 100.0;
    double duration_max_s = 568.0;
    double shift_min_m = 300.0;
    double shift_max_m = 1000.0;
    double rotation_max_deg = 20.0;

    void validate() const;
};

struct AttackSpec {
    AttackKind kind = AttackKind::Targeted;
    int start_epoch = 0;
    double duration_s = 100.0;   // [100, 568]
    double shift_m = 300.0;      // [300, 1000]
    double rotation_deg = 0.0;   // [-20, 20]; 0 for targeted attacks
    double bearing_rad = 0.0;    // horizontal direction of the trajectory shift
    EcefVector spoofer_position = EcefVector::Zero();  // static transmitter site

    int window_epochs(double epoch_interval_s) const;
    // Throws unless the spec satisfies its range invariants and the window
    // [start_epoch, start_epoch + duration) fits in a sequence of `epochs`.
    void validate(int epochs, double epoch_interval_s) const;
};

}  // namespace psrdet
