#include "securereqnet/architectures.hpp"

#include "securereqnet/error.hpp"

namespace srn {
namespace {

bool is_parallel(ArchName name) { return name == ArchName::Shallow || name == ArchName::Deep; }

std::size_t pooled_length(std::size_t length, const ArchitectureSpec& spec) {
  return (length - spec.pool_window) / spec.pool_stride + 1;
}

// Output length after the sequential or per-branch stages, 0 on underflow.
std::size_t surviving_length(const ArchitectureSpec& spec, std::size_t length, const ConvSpec& first) {
  auto conv = [](std::size_t len, std::size_t n) -> std::size_t { return len >= n ? len - n + 1 : 0; };
  auto pool = [&](std::size_t len) -> std::size_t { return len >= spec.pool_window ? pooled_length(len, spec) : 0; };
  if (is_parallel(spec.name)) {
    std::size_t len = conv(length, first.ngram);
    if (spec.name == ArchName::Deep && len > 0) {
      len = pool(len);
      if (spec.second_conv.filters > 0 && len > 0) len = conv(len, spec.second_conv.ngram);
    }
    return len;
  }
  std::size_t len = length;
  for (const auto& c : spec.kernel_plan) {
    len = conv(len, c.ngram);
    if (len > 0 && c.pool_after) len = pool(len);
    if (len == 0) return 0;
  }
  return len;
}

void validate(const ArchitectureSpec& spec) {
  if (spec.dim == 0) fail(ErrorKind::Usage, "architecture: dim must be >= 1");
  if (spec.kernel_plan.empty()) fail(ErrorKind::Usage, "architecture: empty kernel plan");
  for (const auto& c : spec.kernel_plan) {
    if (c.ngram == 0 || c.filters == 0) fail(ErrorKind::Usage, "architecture: kernel ngram and filters must be >= 1");
  }
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) fail(ErrorKind::Usage, "architecture: dropout rate must be in [0, 1)");
  if (spec.pool_window == 0 || spec.pool_stride == 0) fail(ErrorKind::Usage, "architecture: pool window/stride must be >= 1");
  const std::size_t min_len = minimum_length(spec);
  if (spec.length < min_len) {
    fail(ErrorKind::Shape, std::string(to_string(spec.name)) + ": input length " + std::to_string(spec.length) +
                               " too short; needs at least " + std::to_string(min_len));
  }
}

void append_dense_stack(LayerStack& layers, std::size_t inputs, const ArchitectureSpec& spec) {
  for (std::size_t width : spec.fc_plan) {
    layers.push_back(std::make_unique<Dense>(inputs, width));
    layers.push_back(std::make_unique<ReLU>());
    layers.push_back(std::make_unique<Dropout>(spec.dropout_rate));
    inputs = width;
  }
  layers.push_back(std::make_unique<Dense>(inputs, 2));
  layers.push_back(std::make_unique<Softmax>());
}

}  // namespace

std::string_view to_string(ArchName name) {
  switch (name) {
    case ArchName::Shallow: return "shallow";
    case ArchName::Deep: return "deep";
    case ArchName::AlexSRN: return "alex";
    case ArchName::AlphaSRN: return "alpha";
  }
  return "unknown";
}

ArchName parse_arch_name(std::string_view name) {
  if (name == "shallow") return ArchName::Shallow;
  if (name == "deep") return ArchName::Deep;
  if (name == "alex") return ArchName::AlexSRN;
  if (name == "alpha") return ArchName::AlphaSRN;
  fail(ErrorKind::Usage, "unknown architecture '" + std::string(name) + "' (expected shallow, deep, alex or alpha)");
}

nlohmann::ordered_json spec_to_json(const ArchitectureSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = to_string(spec.name);
  j["input"] = {spec.length, spec.dim};
  j["kernel_plan"] = nlohmann::ordered_json::array();
  for (const auto& c : spec.kernel_plan) {
    j["kernel_plan"].push_back({{"ngram", c.ngram}, {"filters", c.filters}, {"pool_after", c.pool_after}});
  }
  j["second_conv"] = {{"ngram", spec.second_conv.ngram}, {"filters", spec.second_conv.filters}};
  j["fc_plan"] = spec.fc_plan;
  j["dropout_rate"] = spec.dropout_rate;
  j["pool"] = {{"window", spec.pool_window}, {"stride", spec.pool_stride}};
  j["seed"] = spec.seed;
  return j;
}

ArchitectureSpec spec_from_json(const nlohmann::json& j) {
  try {
    ArchitectureSpec spec;
    spec.name = parse_arch_name(j.at("name").get<std::string>());
    spec.length = j.at("input").at(0).get<std::size_t>();
    spec.dim = j.at("input").at(1).get<std::size_t>();
    for (const auto& c : j.at("kernel_plan")) {
      spec.kernel_plan.push_back({c.at("ngram").get<std::size_t>(), c.at("filters").get<std::size_t>(),
                                  c.value("pool_after", false)});
    }
    if (j.contains("second_conv")) {
      spec.second_conv = {j["second_conv"].at("ngram").get<std::size_t>(),
                          j["second_conv"].at("filters").get<std::size_t>(), false};
    }
    spec.fc_plan = j.at("fc_plan").get<std::vector<std::size_t>>();
    spec.dropout_rate = j.at("dropout_rate").get<double>();
    spec.pool_window = j.at("pool").at("window").get<std::size_t>();
    spec.pool_stride = j.at("pool").at("stride").get<std::size_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("architecture spec: ") + e.what());
  }
}

ArchitectureSpec shallow_spec(std::size_t length, std::size_t dim, std::size_t filters_per_kernel) {
  ArchitectureSpec s;
  s.name = ArchName::Shallow;
  s.length = length;
  s.dim = dim;
  s.kernel_plan = {{1, filters_per_kernel}, {3, filters_per_kernel}, {5, filters_per_kernel}};
  return s;
}

ArchitectureSpec deep_spec(std::size_t length, std::size_t dim, std::size_t filters_per_kernel,
                           std::size_t second_conv_filters) {
  ArchitectureSpec s = shallow_spec(length, dim, filters_per_kernel);
  s.name = ArchName::Deep;
  s.second_conv = {3, second_conv_filters, false};
  return s;
}

ArchitectureSpec alex_spec(std::size_t length, std::size_t dim) {
  ArchitectureSpec s;
  s.name = ArchName::AlexSRN;
  s.length = length;
  s.dim = dim;
  s.kernel_plan = {{7, 96, true}, {5, 256, true}, {3, 384, false}, {3, 384, false}, {3, 256, true}};
  s.fc_plan = {1024, 1024};
  return s;
}

ArchitectureSpec alpha_spec(std::size_t length, std::size_t dim, std::size_t conv5_filters,
                            std::vector<std::size_t> fc_plan) {
  ArchitectureSpec s;
  s.name = ArchName::AlphaSRN;
  s.length = length;
  s.dim = dim;
  s.kernel_plan = {{7, 32, true}, {5, 64, true}, {3, 128, false}, {3, 64, false}, {3, conv5_filters, false}};
  s.fc_plan = std::move(fc_plan);
  return s;
}

ArchitectureSpec default_spec(ArchName name, std::size_t length, std::size_t dim) {
  switch (name) {
    case ArchName::Shallow: return shallow_spec(length, dim);
    case ArchName::Deep: return deep_spec(length, dim);
    case ArchName::AlexSRN: return alex_spec(length, dim);
    case ArchName::AlphaSRN: return alpha_spec(length, dim);
  }
  fail(ErrorKind::Usage, "unknown architecture");
}

std::size_t minimum_length(const ArchitectureSpec& spec) {
  std::size_t need = 1;
  for (const auto& c : spec.kernel_plan) {
    while (surviving_length(spec, need, c) == 0) ++need;
  }
  return need;
}

Network build_network(const ArchitectureSpec& spec) {
  validate(spec);
  LayerStack layers;
  if (is_parallel(spec.name)) {
    std::vector<LayerStack> branches;
    std::size_t merged = 0;
    for (const auto& c : spec.kernel_plan) {
      LayerStack branch;
      branch.push_back(std::make_unique<Conv>(c.ngram, spec.dim, c.filters));
      branch.push_back(std::make_unique<ReLU>());
      std::size_t width = c.filters;
      if (spec.name == ArchName::Deep) {
        branch.push_back(std::make_unique<MaxPool>(spec.pool_window, spec.pool_stride));
        if (spec.second_conv.filters > 0) {
          branch.push_back(std::make_unique<Conv>(spec.second_conv.ngram, c.filters, spec.second_conv.filters));
          branch.push_back(std::make_unique<ReLU>());
          width = spec.second_conv.filters;
        }
      }
      branch.push_back(std::make_unique<GlobalMaxPool>());
      branches.push_back(std::move(branch));
      merged += width;
    }
    layers.push_back(std::make_unique<Concat>(std::move(branches)));
    layers.push_back(std::make_unique<Dropout>(spec.dropout_rate));
    append_dense_stack(layers, merged, spec);
  } else {
    std::size_t width = spec.dim;
    std::size_t len = spec.length;
    for (const auto& c : spec.kernel_plan) {
      layers.push_back(std::make_unique<Conv>(c.ngram, width, c.filters));
      layers.push_back(std::make_unique<ReLU>());
      len = len - c.ngram + 1;
      if (c.pool_after) {
        layers.push_back(std::make_unique<MaxPool>(spec.pool_window, spec.pool_stride));
        len = pooled_length(len, spec);
      }
      width = c.filters;
    }
    layers.push_back(std::make_unique<Flatten>());
    append_dense_stack(layers, len * width, spec);
  }
  Network net({spec.length, spec.dim}, std::move(layers));
  net.initialize(spec.seed);
  return net;
}

Network build_shallow(std::size_t length, std::size_t dim, std::size_t filters_per_kernel) {
  return build_network(shallow_spec(length, dim, filters_per_kernel));
}

Network build_deep(std::size_t length, std::size_t dim, std::size_t filters_per_kernel, std::size_t second_conv_filters) {
  return build_network(deep_spec(length, dim, filters_per_kernel, second_conv_filters));
}

Network build_alex(std::size_t length, std::size_t dim) { return build_network(alex_spec(length, dim)); }

Network build_alpha(std::size_t length, std::size_t dim, std::size_t conv5_filters) {
  return build_network(alpha_spec(length, dim, conv5_filters));
}

std::size_t count_params(const Network& net) { return net.count_params(); }

}  // namespace srn
