#pragma once

#include "coqg/analysis/flow_heatmap.hpp"
#include "coqg/corpus/coqa_reader.hpp"
#include "coqg/corpus/coreference.hpp"
#include "coqg/corpus/example_io.hpp"
#include "coqg/corpus/examples_builder.hpp"
#include "coqg/corpus/pipeline.hpp"
#include "coqg/corpus/pronouns.hpp"
#include "coqg/corpus/span_locator.hpp"
#include "coqg/corpus/split.hpp"
#include "coqg/corpus/tokenizer.hpp"
#include "coqg/corpus/types.hpp"
#include "coqg/corpus/vocabulary.hpp"
#include "coqg/decode/beam_search.hpp"
#include "coqg/metrics/evaluation.hpp"
#include "coqg/metrics/ngram.hpp"
#include "coqg/nnet/checkpoint.hpp"
#include "coqg/nnet/config.hpp"
#include "coqg/nnet/encoded_example.hpp"
#include "coqg/nnet/graph.hpp"
#include "coqg/nnet/model.hpp"
#include "coqg/objectives/losses.hpp"
#include "coqg/objectives/trainer.hpp"
