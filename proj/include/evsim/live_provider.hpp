#pragma once

#include <filesystem>
#include <string>

#include "evsim/cognition.hpp"

namespace evsim {

struct LiveProviderConfig {
    std::string base_url = "https://api.openai.com/v1"; // scheme://host[:port][/prefix]
    std::string model = "gpt-4o-mini";
    std::string api_key;                                 // usually from LLM_API_KEY
    double temperature = 0.0;
    int timeout_seconds = 60;
    std::filesystem::path prompts_dir;                   // <task>.txt overrides
};

/// Talks to an OpenAI-compatible chat-completions endpoint, asking for
/// JSON constrained by response_schema(task). Returns the message content
/// unvalidated; HTTP or envelope problems throw ProviderError.
class OpenAiCompatibleProvider final : public CognitionProvider {
public:
    explicit OpenAiCompatibleProvider(LiveProviderConfig config);

    std::string complete(CognitionTask task, const Json& request, const RepairHint* repair) override;

    /// Request body that complete() would POST.
    Json build_body(CognitionTask task, const Json& request, const RepairHint* repair) const;

    std::string system_prompt(CognitionTask task) const;

private:
    LiveProviderConfig config_;
    std::string origin_; // scheme://host[:port]
    std::string path_;   // prefix + /chat/completions
};

/// Built-in system prompt for `task`, used when no override file exists.
std::string default_prompt(CognitionTask task);

} // namespace evsim
