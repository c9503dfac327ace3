"""
Distância intrínseca sobre a métrica induzida discretizada: grafo ponderado
de 8 vizinhos na grade polar, caminhos mínimos (Dijkstra do scipy),
distância à fronteira e comprimento de travessia do labirinto.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import sparse
from scipy.sparse import csgraph

from dominio_plano import Grid
from erros import BranchPointError, ConnectivityError
from labirinto import LabyrinthSpec
from nucleo_weierstrass import MetricField

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class MetricGraph:
    grid: Grid
    adjacencia: sparse.csr_matrix

    @property
    def n_nos(self) -> int:
        return self.adjacencia.shape[0]


@dataclass
class ResultadoTravessia:
    distancia: float
    rho_estimado: float
    caminho: List[int]

    def to_dict(self) -> Dict:
        return {"distancia": self.distancia, "rho_estimado": self.rho_estimado,
                "nos_no_caminho": len(self.caminho)}


# vizinhos (di, dj): radial, angular e as duas diagonais
_VIZINHOS = ((1, 0), (0, 1), (1, 1), (1, -1))


def metric_graph(grid: Grid, metric: MetricField) -> MetricGraph:
    """
    Peso da aresta = média de λ nas extremidades × |Δz|.

    Em discos as cópias do centro na linha 0 são um único nó (índice 0),
    ligado radialmente a toda a linha 1.
    """
    lambda2 = np.asarray(metric.lambda2, dtype=float).reshape(grid.z.shape)
    if np.any(~np.isfinite(lambda2)) or np.any(lambda2 <= 0):
        no = int(np.argmin(np.where(np.isfinite(lambda2), lambda2, -np.inf)))
        raise BranchPointError(f"λ² não positivo no nó {no}", no=no)
    lam = np.sqrt(lambda2)
    nr, na = grid.radial_count, grid.angular_count
    i, j = np.meshgrid(np.arange(nr), np.arange(na), indexing="ij")

    linhas, colunas, pesos = [], [], []
    for di, dj in _VIZINHOS:
        i2 = i + di
        validos = i2 < nr
        if grid.parent.e_disco and di == 1 and dj != 0:
            validos = validos & (i > 0)
        if di == 0 and na < 3:
            continue
        a_i, a_j = i[validos], j[validos]
        b_i, b_j = i2[validos], (j[validos] + dj) % na
        dz = np.abs(grid.z[a_i, a_j] - grid.z[b_i, b_j])
        w = 0.5 * (lam[a_i, a_j] + lam[b_i, b_j]) * dz
        positivos = dz > 0
        origem = a_i * na + a_j
        destino = b_i * na + b_j
        if grid.parent.e_disco:
            origem = np.where(a_i == 0, 0, origem)
        linhas.append(origem[positivos])
        colunas.append(destino[positivos])
        pesos.append(w[positivos])

    n = nr * na
    adjacencia = sparse.csr_matrix(
        (np.concatenate(pesos), (np.concatenate(linhas), np.concatenate(colunas))), shape=(n, n))
    return MetricGraph(grid=grid, adjacencia=adjacencia)


def _no_canonico(grid: Grid, no: int) -> int:
    if grid.parent.e_disco and no < grid.angular_count:
        return 0
    return int(no)


def _dijkstra(graph: MetricGraph, origens, varias_origens: bool = False):
    return csgraph.dijkstra(graph.adjacencia, directed=False, indices=origens,
                            return_predecessors=True, min_only=varias_origens)


def intrinsic_distance(graph: MetricGraph, source: int, targets: Sequence[int]) -> float:
    """Menor distância do nó `source` a qualquer nó de `targets`"""
    distancias, _ = _dijkstra(graph, _no_canonico(graph.grid, source))
    valor = float(np.min(distancias[np.asarray(targets, dtype=int)]))
    if not np.isfinite(valor):
        raise ConnectivityError(f"nenhum alvo alcançável a partir do nó {source}")
    return valor


def distance_field(graph: MetricGraph, source: int) -> np.ndarray:
    grid = graph.grid
    distancias, _ = _dijkstra(graph, _no_canonico(grid, source))
    if grid.parent.e_disco:
        distancias[1:grid.angular_count] = distancias[0]
    return distancias


def distance_to_boundary(graph: MetricGraph, source: int) -> float:
    return intrinsic_distance(graph, source, graph.grid.fronteira())


def caminho_mais_curto(graph: MetricGraph, origens: Sequence[int], destinos: Sequence[int]) -> Tuple[float, List[int]]:
    """Caminho mínimo entre dois conjuntos de nós (distância e lista de nós)"""
    distancias, predecessores, _ = csgraph.dijkstra(
        graph.adjacencia, directed=False,
        indices=np.unique([_no_canonico(graph.grid, k) for k in origens]),
        return_predecessors=True, min_only=True)
    destinos = np.asarray(destinos, dtype=int)
    alvo = int(destinos[np.argmin(distancias[destinos])])
    valor = float(distancias[alvo])
    if not np.isfinite(valor):
        raise ConnectivityError("conjuntos de nós desconectados")
    caminho = [alvo]
    while predecessores[caminho[-1]] >= 0:
        caminho.append(int(predecessores[caminho[-1]]))
    return valor, caminho[::-1]


def crossing_length(labyrinth: LabyrinthSpec, metric: MetricField, grid: Grid,
                    mu: float) -> ResultadoTravessia:
    """
    Menor comprimento, na métrica dada, entre os dois círculos de ∂C_j
    e a estimativa ρ̂ = d / (μ N).
    """
    if grid.parent != labyrinth.parent:
        raise ConnectivityError("a grade deve cobrir exatamente C_j")
    grafo = metric_graph(grid, metric)
    distancia, caminho = caminho_mais_curto(grafo, grid.fronteira_interna(), grid.fronteira_externa())
    rho = distancia / (mu * labyrinth.N)
    logger.info("Travessia do labirinto medida", N=labyrinth.N, distancia=distancia, rho_estimado=rho)
    return ResultadoTravessia(distancia=distancia, rho_estimado=rho, caminho=caminho)
