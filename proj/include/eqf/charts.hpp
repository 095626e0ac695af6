#pragma once

#include <array>
#include <string>
#include <string_view>

#include "eqf/vins_model.hpp"

namespace eqf {

enum class Variant { Eskf, SdEqf, RiEkf, LiEkf, IsdEqf, TEqf };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::Eskf,   Variant::SdEqf,  Variant::RiEkf,
                                                        Variant::LiEkf, Variant::IsdEqf, Variant::TEqf};

std::string_view variant_name(Variant v);
/// Accepts the canonical names ("ESKF", "SD_EQF", "RI_EKF", "LI_EKF", "ISD_EQF", "T_EQF").
Variant parse_variant(std::string_view name);

/// Fixed layout offsets inside an error vector.
namespace layout {
inline constexpr int kTheta = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kImu = 15;
inline int landmark(int i) { return kImu + 3 * i; }
}  // namespace layout

using ErrorState = Eigen::VectorXd;

ErrorState chart_forward(Variant variant, const VinsState& hat, const VinsState& x);
VinsState chart_inverse(Variant variant, const VinsState& hat, const ErrorState& eps);

}  // namespace eqf
