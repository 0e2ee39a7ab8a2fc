// Copyright (c) 2026 The goaec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <utility>

#include "goaec/kb.hpp"

namespace goaec::kb {

KbStore::KbStore(KnowledgeBase initial)
    : current_(std::make_shared<const KnowledgeBase>(std::move(initial))) {}

std::shared_ptr<const KnowledgeBase> KbStore::snapshot() const {
  std::lock_guard lock(publish_mu_);
  return current_;
}

template <typename Fn>
std::uint64_t KbStore::mutate(Fn&& fn) {
  std::lock_guard writer(writer_mu_);
  auto next = std::make_shared<KnowledgeBase>(*snapshot());
  fn(*next);
  const std::uint64_t revision = next->revision();
  std::shared_ptr<const KnowledgeBase> published = std::move(next);
  {
    std::lock_guard lock(publish_mu_);
    current_.swap(published);
  }
  return revision;
}

std::uint64_t KbStore::add(std::string_view correct, std::string_view erroneous,
                           VariantSource source, std::uint64_t count) {
  return mutate([&](KnowledgeBase& kb) { kb.add(correct, erroneous, source, count); });
}

std::uint64_t KbStore::remove(std::string_view correct, std::string_view erroneous) {
  return mutate([&](KnowledgeBase& kb) { kb.remove(correct, erroneous); });
}

std::uint64_t KbStore::replace(KnowledgeBase kb) {
  return mutate([&](KnowledgeBase& next) {
    const std::uint64_t floor = next.revision();
    next = std::move(kb);
    next.revision_ = std::max(next.revision_, floor) + 1;
  });
}

}  // namespace goaec::kb
