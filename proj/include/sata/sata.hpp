#pragma once

#include "sata/core/dropout.hpp"
#include "sata/core/error.hpp"
#include "sata/core/gradcheck.hpp"
#include "sata/core/init.hpp"
#include "sata/core/ops.hpp"
#include "sata/core/pca.hpp"
#include "sata/core/tape.hpp"
#include "sata/core/tensor.hpp"
#include "sata/cells.hpp"
#include "sata/config.hpp"
#include "sata/embeddings.hpp"
#include "sata/encoder.hpp"
#include "sata/heads.hpp"
#include "sata/io.hpp"
#include "sata/model.hpp"
#include "sata/training/checkpoint.hpp"
#include "sata/training/optim.hpp"
#include "sata/training/trainer.hpp"
#include "sata/treebank/binary_tree.hpp"
#include "sata/treebank/cluster_map.hpp"
#include "sata/treebank/example.hpp"
#include "sata/treebank/parse_tree.hpp"
#include "sata/treebank/transitions.hpp"
