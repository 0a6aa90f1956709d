"""
Message-passing layers of the four architectures.

    gcn    x' = ReLU(Ahat x W + b),              Ahat = D^-1/2 (A+I) D^-1/2
    gin    x' = MLP((1 + eps) x + sum_nbr x),    MLP = Linear-ReLU-Linear-ReLU
    sage   x' = ReLU([x | mean_nbr x] W + b)
    dgcnn  x' = tanh(D^-1 (A+I) x W), plus a final 1-channel layer

The per-node embedding is the concatenation of every layer's output.
"""

from config import Architecture, GnnConfig
from exceptions import ShapeError
from models import EnclosingSubgraph, FeatureMatrix
from services.autodiff.tensor import Tensor, add, concat, matmul, relu, tanh
from services.gnn.batch import SubgraphBatch, gcn_operator, gin_operator, mean_operator, random_walk_operator
from services.gnn.params import ModelParams


def _linear(x: Tensor, params: ModelParams, prefix: str) -> Tensor:
    return add(matmul(x, params[f"{prefix}.weight"]), params[f"{prefix}.bias"])


def embed_batch(params: ModelParams, batch: SubgraphBatch) -> Tensor:
    """Node embeddings for every node of a batch, shape (total_nodes, embedding_width)."""
    cfg = params.cfg
    if batch.width != params.feature_width:
        raise ShapeError("embed_nodes", (batch.width,), (params.feature_width,))

    x = Tensor(batch.features)
    outputs = []
    if cfg.architecture == Architecture.GCN:
        op = gcn_operator(batch.adjacency)
        for k in range(1, cfg.layers + 1):
            x = relu(add(matmul(op, matmul(x, params[f"conv{k}.weight"])), params[f"conv{k}.bias"]))
            outputs.append(x)
    elif cfg.architecture == Architecture.SAGE:
        op = mean_operator(batch.adjacency)
        for k in range(1, cfg.layers + 1):
            x = relu(_linear(concat([x, matmul(op, x)], axis=1), params, f"conv{k}"))
            outputs.append(x)
    elif cfg.architecture == Architecture.GIN:
        op = gin_operator(batch.adjacency, cfg.gin_epsilon)
        for k in range(1, cfg.layers + 1):
            h = matmul(op, x)
            h = relu(_linear(h, params, f"conv{k}.mlp1"))
            x = relu(_linear(h, params, f"conv{k}.mlp2"))
            outputs.append(x)
    else:
        op = random_walk_operator(batch.adjacency)
        for k in range(1, cfg.layers + 2):
            x = tanh(matmul(op, matmul(x, params[f"conv{k}.weight"])))
            outputs.append(x)
    return concat(outputs, axis=1)


def embed_nodes(params: ModelParams, cfg: GnnConfig, sub: EnclosingSubgraph, feats: FeatureMatrix) -> Tensor:
    """Embeddings of one subgraph's nodes, in its local order."""
    if cfg != params.cfg:
        params = ModelParams(cfg=cfg, feature_width=params.feature_width, tensors=params.tensors)
    return embed_batch(params, SubgraphBatch.from_pairs([(sub, feats)]))
