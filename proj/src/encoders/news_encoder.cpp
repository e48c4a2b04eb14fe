#include "newsrec/encoders/news_encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "newsrec/common/error.hpp"
#include "newsrec/nn/ops.hpp"

namespace newsrec::encoders {

using nn::Init;
using nn::Tensor;

std::string to_string(TextBlock b) {
  switch (b) {
    case TextBlock::kCnnAdditive: return "cnn_additive";
    case TextBlock::kMhsaAdditive: return "mhsa_additive";
    case TextBlock::kPersonalized: return "personalized";
  }
  return "?";
}

std::string to_string(Fusion f) {
  return f == Fusion::kAttend ? "attend" : "concat_project";
}

TextBlock parse_text_block(const std::string& s) {
  if (s == "cnn_additive") return TextBlock::kCnnAdditive;
  if (s == "mhsa_additive") return TextBlock::kMhsaAdditive;
  if (s == "personalized") return TextBlock::kPersonalized;
  throw ConfigError("unknown text_block '" + s +
                    "' (expected cnn_additive, mhsa_additive or personalized)");
}

Fusion parse_fusion(const std::string& s) {
  if (s == "attend") return Fusion::kAttend;
  if (s == "concat_project") return Fusion::kConcatProject;
  throw ConfigError("unknown fusion '" + s + "' (expected attend or concat_project)");
}

namespace {

nn::Mask token_mask(std::span<const std::int64_t> ids) {
  nn::Mask m(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) m[i] = ids[i] != data::Vocabulary::kPad;
  return m;
}

bool any(const nn::Mask& m) {
  for (auto v : m) if (v) return true;
  return false;
}

Tensor zero_pad_row(Tensor table) {
  auto d = table.mutable_data();
  std::fill_n(d.begin(), table.cols(), 0.0);
  return table;
}

}  // namespace

NewsEncoder::NewsEncoder(nn::ParameterStore& store, const NewsEncoderConfig& cfg,
                         const NewsEncoderSizes& sizes, const PretrainedTables& pretrained)
    : cfg_(cfg) {
  if (cfg.d_model == 0 || cfg.word_dim == 0 || cfg.attention_dim == 0) {
    throw ConfigError("news encoder widths must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (pretrained.words.defined()) {
    if (pretrained.words.rows() != sizes.words || pretrained.words.cols() != cfg.word_dim) {
      throw ConfigError("pretrained word table is " + nn::shape_string(pretrained.words.shape()) +
                        ", expected [" + std::to_string(sizes.words) + ", " +
                        std::to_string(cfg.word_dim) + "]");
    }
    word_emb_ = store.add_pretrained("news.word_emb", pretrained.words, true);
  } else {
    word_emb_ = store.create("news.word_emb", {sizes.words, cfg.word_dim}, Init::kNormal);
    zero_pad_row(word_emb_);
  }

  switch (cfg.text_block) {
    case TextBlock::kCnnAdditive:
    case TextBlock::kPersonalized:
      conv_ = nn::Conv1d(store, "news.text.conv", cfg.word_dim, cfg.d_model, cfg.cnn_window);
      break;
    case TextBlock::kMhsaAdditive:
      if (cfg.word_dim != cfg.d_model) {
        project_words_ = true;
        word_proj_ = nn::Dense(store, "news.text.proj", cfg.word_dim, cfg.d_model, false);
      }
      text_mhsa_ = nn::MultiHeadSelfAttention(store, "news.text.mhsa", cfg.d_model, cfg.heads);
      break;
  }
  if (cfg.text_block == TextBlock::kPersonalized) {
    query_proj_ = nn::Dense(store, "news.text.query", cfg.user_query_dim, cfg.d_model);
  } else {
    text_att_ = nn::AdditiveAttention(store, "news.text.att", cfg.d_model, cfg.attention_dim);
  }

  if (cfg.use_abstract) ++n_features_;
  if (cfg.use_category) {
    cat_emb_ = store.create("news.cat_emb", {sizes.categories, cfg.category_dim}, Init::kNormal);
    cat_dense_ = nn::Dense(store, "news.cat_dense", cfg.category_dim, cfg.d_model);
    subcat_emb_ =
        store.create("news.subcat_emb", {sizes.subcategories, cfg.category_dim}, Init::kNormal);
    subcat_dense_ = nn::Dense(store, "news.subcat_dense", cfg.category_dim, cfg.d_model);
    n_features_ += 2;
  }
  if (cfg.use_entities) {
    if (pretrained.entities.defined()) {
      if (pretrained.entities.rows() != sizes.entities ||
          pretrained.entities.cols() != cfg.entity_dim) {
        throw ConfigError("pretrained entity table is " +
                          nn::shape_string(pretrained.entities.shape()) + ", expected [" +
                          std::to_string(sizes.entities) + ", " +
                          std::to_string(cfg.entity_dim) + "]");
      }
      ent_emb_ = store.add_pretrained("news.ent_emb", pretrained.entities, false);
    } else {
      ent_emb_ = store.create("news.ent_emb", {sizes.entities, cfg.entity_dim}, Init::kNormal);
      zero_pad_row(ent_emb_);
    }
    ent_dense_ = nn::Dense(store, "news.ent_dense", cfg.entity_dim, cfg.d_model);
    ent_mhsa_ = nn::MultiHeadSelfAttention(store, "news.ent_mhsa", cfg.d_model, cfg.heads);
    ent_att_ = nn::AdditiveAttention(store, "news.ent_att", cfg.d_model, cfg.attention_dim);
    ++n_features_;
  }
  if (cfg.fusion == Fusion::kAttend) {
    if (n_features_ > 1) {
      fusion_att_ = nn::AdditiveAttention(store, "news.fusion_att", cfg.d_model, cfg.attention_dim);
    }
  } else {
    fusion_proj_ =
        nn::Dense(store, "news.fusion_proj", n_features_ * cfg.d_model, cfg.d_model);
  }
}

Tensor NewsEncoder::encode_text(std::span<const std::int64_t> tokens,
                                const nn::ForwardContext& ctx,
                                const std::optional<Tensor>& query) const {
  const nn::Mask mask = token_mask(tokens);
  if (!any(mask)) throw DataError("news text has no tokens besides padding");
  Tensor x = ctx.maybe_dropout(nn::embedding_lookup(word_emb_, tokens, data::Vocabulary::kPad));
  Tensor h;
  switch (cfg_.text_block) {
    case TextBlock::kCnnAdditive:
    case TextBlock::kPersonalized:
      h = conv_(x);
      break;
    case TextBlock::kMhsaAdditive:
      h = text_mhsa_(project_words_ ? word_proj_(x) : x, mask);
      break;
  }
  if (cfg_.text_block == TextBlock::kPersonalized) {
    const Tensor q = nn::tanh(query_proj_.forward_vector(*query));
    return ctx.maybe_dropout(nn::dot_attention(h, q, mask).output);
  }
  return ctx.maybe_dropout(text_att_(h, mask).output);
}

Tensor NewsEncoder::encode_label(const Tensor& table, const nn::Dense& dense, int id,
                                 const nn::ForwardContext& ctx) const {
  const std::int64_t ids[] = {id};
  Tensor e = ctx.maybe_dropout(nn::embedding_lookup(table, ids, -1));
  return nn::relu(nn::reshape(dense(e), {cfg_.d_model}));
}

Tensor NewsEncoder::encode_entities(std::span<const std::int64_t> ids,
                                    const nn::ForwardContext& ctx) const {
  const nn::Mask mask = token_mask(ids);
  Tensor e = ctx.maybe_dropout(nn::embedding_lookup(ent_emb_, ids, data::Vocabulary::kPad));
  Tensor h = ent_mhsa_(ent_dense_(e), mask);
  return ctx.maybe_dropout(ent_att_(h, mask).output);
}

Tensor NewsEncoder::encode(const data::NewsItem& item, const nn::ForwardContext& ctx,
                           const std::optional<Tensor>& user_query) const {
  if (personalized()) {
    if (!user_query || !user_query->defined()) {
      throw Error("personalized news encoder requires a user query (news " + item.news_id + ")");
    }
    if (user_query->dim() != 1 || user_query->numel() != cfg_.user_query_dim) {
      throw Error("user query has shape " + nn::shape_string(user_query->shape()) +
                  ", expected [" + std::to_string(cfg_.user_query_dim) + "]");
    }
  }
  std::vector<Tensor> features;
  nn::Mask present;
  features.push_back(encode_text(item.title_tokens, ctx, user_query));
  present.push_back(1);
  const Tensor zero = Tensor::zeros({cfg_.d_model});
  auto add = [&](bool ok, auto&& make) {
    features.push_back(ok ? make() : zero);
    present.push_back(ok ? 1 : 0);
  };
  if (cfg_.use_abstract) {
    add(any(token_mask(item.abstract_tokens)),
        [&] { return encode_text(item.abstract_tokens, ctx, user_query); });
  }
  if (cfg_.use_category) {
    add(true, [&] { return encode_label(cat_emb_, cat_dense_, item.category_id, ctx); });
    add(true, [&] { return encode_label(subcat_emb_, subcat_dense_, item.subcategory_id, ctx); });
  }
  if (cfg_.use_entities) {
    add(any(token_mask(item.entity_ids)), [&] { return encode_entities(item.entity_ids, ctx); });
  }
  if (cfg_.fusion == Fusion::kConcatProject) {
    return fusion_proj_.forward_vector(nn::concat(features));
  }
  if (features.size() == 1) return features.front();
  return fusion_att_(nn::stack_rows(features), present).output;
}

Tensor NewsEncoder::encode_batch(std::span<const data::NewsItem> items,
                                 const nn::ForwardContext& ctx,
                                 std::span<const Tensor> user_queries) const {
  if (items.empty()) return Tensor::zeros({0, cfg_.d_model});
  if (personalized() && user_queries.size() != items.size()) {
    throw Error("personalized batch encoding needs one user query per item");
  }
  std::vector<Tensor> rows;
  rows.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    rows.push_back(personalized() ? encode(items[i], ctx, user_queries[i])
                                  : encode(items[i], ctx));
  }
  return nn::stack_rows(rows);
}

PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const data::Vocabulary& vocab,
                                                std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::unordered_map<std::string, std::vector<double>> rows;
  std::size_t dim = 0, line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    for (std::string v; ss >> v;) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + v + "'");
      }
    }
    if (dim == 0) dim = values.size();
    if (values.empty() || values.size() != dim) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, found " + std::to_string(values.size()));
    }
    if (vocab.contains(token)) rows.emplace(token, std::move(values));
  }
  if (dim == 0) throw DataError("embedding file " + path.string() + " is empty");

  PretrainedEmbeddings out;
  out.dim = dim;
  std::vector<double> table(vocab.size() * dim, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (id == data::Vocabulary::kPad) continue;
    double* dst = table.data() + id * dim;
    auto it = rows.find(vocab.token(static_cast<std::int64_t>(id)));
    if (it != rows.end()) {
      std::copy(it->second.begin(), it->second.end(), dst);
      ++out.covered;
    } else {
      for (std::size_t j = 0; j < dim; ++j) dst[j] = normal(rng);
    }
  }
  const std::size_t regular = vocab.size() - 2;
  out.covered -= rows.count(vocab.token(data::Vocabulary::kUnk));
  out.coverage = regular == 0 ? 0.0 : static_cast<double>(out.covered) / static_cast<double>(regular);
  nn::round_to_precision(table);
  out.table = Tensor::from_data({vocab.size(), dim}, std::move(table));
  return out;
}

Tensor topic_logits(const Tensor& news_embedding, const Tensor& weight, const Tensor& bias) {
  if (weight.dim() != 2 || weight.rows() != news_embedding.numel()) {
    throw Error("topic head shape " + nn::shape_string(weight.shape()) +
                " does not match embedding width " + std::to_string(news_embedding.numel()));
  }
  Tensor y = nn::matmul(nn::reshape(news_embedding, {1, news_embedding.numel()}), weight);
  if (bias.defined()) y = nn::add_row_bias(y, bias);
  return nn::reshape(y, {weight.cols()});
}

}  // namespace newsrec::encoders
