#include "synthetic.hpp"

#include <string>
#include <string_view>

#include "securereqnet/random.hpp"

namespace srn::testing {
namespace {

constexpr std::string_view kSecurityTemplates[] = {
    "{c} allows remote attackers to execute arbitrary code via a crafted {a}",
    "buffer overflow in {c} lets attackers cause a denial of service with an oversized {a}",
    "sql injection vulnerability in {c} allows attackers to read the database through the {a} parameter",
    "cross site scripting flaw in {c} lets attackers inject malicious script via the {a} field",
    "improper authentication in {c} allows privilege escalation with a forged {a}",
    "attackers can bypass access control in {c} using a crafted {a} token",
    "path traversal vulnerability in {c} exposes sensitive files when the {a} contains dot segments",
    "the {c} leaks credentials and session secrets in the {a} response",
};

constexpr std::string_view kNeutralTemplates[] = {
    "add a dark mode option to the {c} settings page and document the {a} behaviour",
    "refactor the {c} to simplify how the {a} is loaded",
    "the {c} layout breaks on small screens when the {a} panel is open",
    "update dependencies and fix a typo in the {c} {a} readme",
    "improve rendering speed of the {c} when showing long {a} lists",
    "translate the {c} {a} labels into german and french",
    "rename the {a} helper in the {c} for consistency with the style guide",
    "the {c} shows the wrong date format for the {a} column",
};

constexpr std::string_view kComponents[] = {
    "login page", "upload service", "api gateway", "admin panel", "image viewer",
    "search module", "payment form", "report exporter", "mail client", "plugin loader",
};

constexpr std::string_view kArtifacts[] = {
    "request", "file", "header", "image", "url", "cookie", "form", "archive", "query", "profile",
};

constexpr std::string_view kFiller[] = {
    "reported by users after the latest release",
    "seen in version two of the product",
    "happens on every platform we tested",
    "first noticed during the beta",
    "please take a look before the next milestone",
    "affects the desktop and mobile builds",
    "reproducible with the default configuration",
    "customers mentioned this in support tickets",
};

template <std::size_t N>
std::string_view pick(const std::string_view (&items)[N], Rng& rng) {
  return items[rng.below(N)];
}

std::string fill(std::string_view tmpl, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.compare(i, 3, "{c}") == 0) {
      out += pick(kComponents, rng);
      i += 2;
    } else if (tmpl.compare(i, 3, "{a}") == 0) {
      out += pick(kArtifacts, rng);
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

}  // namespace

std::vector<Document> synthetic_issue_corpus(std::size_t n_sr, std::size_t n_neutral, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> labels(n_sr, 1);
  labels.resize(n_sr + n_neutral, 0);
  rng.shuffle(std::span(labels));

  std::vector<Document> docs;
  const Timestamp base = 1'577'836'800;  // 2020-01-01T00:00:00Z
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Document d;
    d.id = "syn-" + std::to_string(i);
    const bool sr = labels[i] == 1;
    d.text = fill(sr ? pick(kSecurityTemplates, rng) : pick(kNeutralTemplates, rng), rng);
    if (rng.below(2) == 0) d.text += ", " + std::string(pick(kFiller, rng));
    d.label = sr ? Label::SR : Label::NonSR;
    d.created_at = base + static_cast<Timestamp>(i) * 3600;
    d.source = rng.below(2) == 0 ? Source::GitHubIssue : Source::GitLabIssue;
    docs.push_back(std::move(d));
  }
  return docs;
}

Dataset planted_spike_dataset(std::size_t n, std::size_t length, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x({length, dim});
    for (auto& v : x.values()) v = rng.uniform(-0.5, 0.5);
    const int y = static_cast<int>(i % 2);
    if (y == 1) x.at(rng.below(length), 0) = 2.0;
    d.inputs.push_back(std::move(x));
    d.labels.push_back(y);
  }
  return d;
}

}  // namespace srn::testing
