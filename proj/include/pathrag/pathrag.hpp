#pragma once

#include <pathrag/baselines.hpp>
#include <pathrag/config.hpp>
#include <pathrag/embedding_index.hpp>
#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/ingestion.hpp>
#include <pathrag/node_retrieval.hpp>
#include <pathrag/path_retrieval.hpp>
#include <pathrag/pipeline.hpp>
#include <pathrag/prompt_assembly.hpp>
#include <pathrag/providers.hpp>
