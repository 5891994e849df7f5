#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "securereqnet/neural.hpp"

namespace srn {

enum class ArchName { Shallow, Deep, AlexSRN, AlphaSRN };

std::string_view to_string(ArchName name);
ArchName parse_arch_name(std::string_view name);

struct ConvSpec {
  std::size_t ngram = 1;
  std::size_t filters = 1;
  bool pool_after = false;  // sequential architectures only

  bool operator==(const ConvSpec&) const = default;
};

/// Declarative description of one network. Shallow and Deep run
/// `kernel_plan` as parallel branches; Alex and Alpha run it as a
/// sequential stack.
struct ArchitectureSpec {
  ArchName name = ArchName::Shallow;
  std::size_t length = 200;
  std::size_t dim = 100;
  std::vector<ConvSpec> kernel_plan;
  ConvSpec second_conv{3, 0, false};  // Deep only: per-branch conv after pooling; filters 0 disables it
  std::vector<std::size_t> fc_plan;   // hidden dense widths before the 2-way head
  double dropout_rate = 0.2;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 2;
  std::uint64_t seed = 0;

  bool operator==(const ArchitectureSpec&) const = default;
};

nlohmann::ordered_json spec_to_json(const ArchitectureSpec& spec);
ArchitectureSpec spec_from_json(const nlohmann::json& j);

ArchitectureSpec shallow_spec(std::size_t length, std::size_t dim = 100, std::size_t filters_per_kernel = 128);
ArchitectureSpec deep_spec(std::size_t length, std::size_t dim = 100, std::size_t filters_per_kernel = 128,
                           std::size_t second_conv_filters = 128);
ArchitectureSpec alex_spec(std::size_t length, std::size_t dim = 100);
ArchitectureSpec alpha_spec(std::size_t length, std::size_t dim = 100, std::size_t conv5_filters = 64,
                            std::vector<std::size_t> fc_plan = {128, 64, 32});
/// Default spec for a named architecture.
ArchitectureSpec default_spec(ArchName name, std::size_t length, std::size_t dim = 100);

/// Smallest input length whose shapes survive every conv and pool stage.
std::size_t minimum_length(const ArchitectureSpec& spec);

/// Builds the layer graph and initializes weights from `spec.seed`.
Network build_network(const ArchitectureSpec& spec);

Network build_shallow(std::size_t length, std::size_t dim = 100, std::size_t filters_per_kernel = 128);
Network build_deep(std::size_t length, std::size_t dim = 100, std::size_t filters_per_kernel = 128,
                   std::size_t second_conv_filters = 128);
Network build_alex(std::size_t length, std::size_t dim = 100);
Network build_alpha(std::size_t length, std::size_t dim = 100, std::size_t conv5_filters = 64);

std::size_t count_params(const Network& net);

/// Parameter counts reported for the original four networks.
struct ReferenceCount {
  ArchName name;
  std::size_t params;
};
inline constexpr ReferenceCount kReferenceCounts[] = {
    {ArchName::Shallow, 116'354},
    {ArchName::Deep, 662'018},
    {ArchName::AlexSRN, 6'052'866},
    {ArchName::AlphaSRN, 100'946},
};

}  // namespace srn
