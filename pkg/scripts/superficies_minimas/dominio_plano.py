"""
Domínios planos em escala de bancada: anéis, discos, grades polares,
ciclos de homologia, torres de exaustão e conjuntos admissíveis.

Todos os tipos são imutáveis após a construção.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from configuracao import LIMITES_GRADE, QUADRATURA, TOLERANCIAS
from erros import DomainDegenerateError, ResolutionError

logger = structlog.get_logger()


@dataclass(frozen=True)
class AnnulusChart:
    """Anel fechado r <= |z - centro| <= R"""

    inner_radius: float
    outer_radius: float
    center: complex = 0j

    def __post_init__(self):
        if not (math.isfinite(self.inner_radius) and math.isfinite(self.outer_radius)):
            raise DomainDegenerateError("raios não finitos")
        if self.inner_radius <= 0 or self.inner_radius >= self.outer_radius:
            raise DomainDegenerateError(
                f"anel degenerado: r={self.inner_radius}, R={self.outer_radius}")

    @property
    def e_disco(self) -> bool:
        return False

    @property
    def largura(self) -> float:
        return self.outer_radius - self.inner_radius

    def contem(self, z, tol: float = 1e-12):
        rho = np.abs(np.asarray(z) - self.center)
        return (rho >= self.inner_radius - tol) & (rho <= self.outer_radius + tol)


@dataclass(frozen=True)
class DiskChart:
    """Disco fechado |z - centro| <= R"""

    radius: float
    center: complex = 0j

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius <= 0:
            raise DomainDegenerateError(f"disco degenerado: R={self.radius}")

    @property
    def e_disco(self) -> bool:
        return True

    @property
    def inner_radius(self) -> float:
        return 0.0

    @property
    def outer_radius(self) -> float:
        return self.radius

    @property
    def largura(self) -> float:
        return self.radius

    def contem(self, z, tol: float = 1e-12):
        return np.abs(np.asarray(z) - self.center) <= self.radius + tol


Domain = Union[AnnulusChart, DiskChart]


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Grade polar sobre um anel ou disco.

    Os nós são indexados por (i, j), i radial e j angular, com índice plano
    i * angular_count + j. O índice angular é periódico. Em discos a linha
    i = 0 repete o centro em todas as colunas.
    """

    parent: Domain
    radial_count: int
    angular_count: int
    radii: np.ndarray
    angles: np.ndarray
    z: np.ndarray
    cell_area: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.z.ravel()

    @property
    def n_nos(self) -> int:
        return self.radial_count * self.angular_count

    @property
    def passo_radial(self) -> float:
        return float(self.radii[1] - self.radii[0])

    @property
    def passo_angular(self) -> float:
        return 2 * math.pi / self.angular_count

    def indice(self, i: int, j: int) -> int:
        return i * self.angular_count + (j % self.angular_count)

    def fronteira_externa(self) -> np.ndarray:
        i = self.radial_count - 1
        return np.arange(i * self.angular_count, (i + 1) * self.angular_count)

    def fronteira_interna(self) -> np.ndarray:
        if self.parent.e_disco:
            return np.array([], dtype=int)
        return np.arange(0, self.angular_count)

    def fronteira(self) -> np.ndarray:
        return np.concatenate([self.fronteira_interna(), self.fronteira_externa()])

    def no_mais_proximo(self, p: complex) -> int:
        return int(np.argmin(np.abs(self.nodes - p)))


@dataclass(frozen=True, eq=False)
class Cycle:
    """
    Ciclo fechado como poligonal com pesos de quadratura para dz.

    `pesos[k]` multiplica f(pontos[k]) na soma que aproxima a integral de
    contorno; o último ponto repete o primeiro e não recebe peso.
    """

    pontos: np.ndarray
    pesos: np.ndarray
    winding_number: int

    def __post_init__(self):
        if abs(self.pontos[0] - self.pontos[-1]) > 1e-12:
            raise DomainDegenerateError("ciclo não fechado")
        if len(self.pesos) != len(self.pontos) - 1:
            raise DomainDegenerateError("pesos incompatíveis com os pontos do ciclo")

    @property
    def amostras(self) -> np.ndarray:
        return self.pontos[:-1]

    def integrar(self, valores: np.ndarray) -> np.ndarray:
        """Integral de contorno de f dz, com f amostrada em `amostras` (último eixo)"""
        return np.asarray(valores) @ self.pesos


def cycle_from_polyline(pontos: Sequence[complex], winding_number: int) -> Cycle:
    """Ciclo a partir de uma poligonal fechada, com regra do trapézio por segmento"""
    p = np.asarray(pontos, dtype=complex)
    if abs(p[0] - p[-1]) > 1e-12:
        p = np.append(p, p[0])
    dz = np.diff(p)
    pesos = 0.5 * (dz + np.roll(dz, 1))
    return Cycle(pontos=p, pesos=pesos, winding_number=winding_number)


@dataclass(frozen=True)
class ExhaustionTower:
    regions: Tuple[Domain, ...]

    def __len__(self) -> int:
        return len(self.regions)

    def __getitem__(self, n: int) -> Domain:
        return self.regions[n]


@dataclass(frozen=True)
class AdmissibleSet:
    region: Domain
    arcs: Tuple[np.ndarray, ...] = field(default_factory=tuple)


def make_annulus(r: float, R: float, center: complex = 0j) -> AnnulusChart:
    return AnnulusChart(inner_radius=float(r), outer_radius=float(R), center=center)


def make_disk(R: float, center: complex = 0j) -> DiskChart:
    return DiskChart(radius=float(R), center=center)


def fits_labyrinth(domain: Domain, N: int) -> bool:
    """Condição de encaixe 2/N < R - r"""
    return 2.0 / N < domain.largura


def espessura_banda(N: int) -> float:
    return 1.0 / (2.0 * N ** 3)


def sample_grid(domain: Domain, radial_count: int, angular_count: int,
                N: Optional[int] = None) -> Grid:
    """
    Amostra uma grade polar sobre o domínio.

    Com `N` informado, exige que o passo radial não ultrapasse a espessura
    1/(2N^3) das bandas do labirinto.
    """
    if radial_count < LIMITES_GRADE["radial_minimo"] or angular_count < LIMITES_GRADE["angular_minimo"]:
        raise ResolutionError(
            f"grade pequena demais: {radial_count}x{angular_count} "
            f"(mínimo {LIMITES_GRADE['radial_minimo']}x{LIMITES_GRADE['angular_minimo']})")
    if radial_count * angular_count > LIMITES_GRADE["maximo_nos"]:
        raise ResolutionError(f"grade excede o limite de {LIMITES_GRADE['maximo_nos']} nós")

    radii = np.linspace(domain.inner_radius, domain.outer_radius, radial_count)
    passo = radii[1] - radii[0]
    if N is not None:
        espessura = espessura_banda(N)
        if passo > espessura * (1 + 1e-9):
            raise ResolutionError(
                f"passo radial {passo:.6g} não resolve bandas de espessura {espessura:.6g} para N={N}")

    angles = 2 * np.pi * np.arange(angular_count) / angular_count
    z = domain.center + radii[:, None] * np.exp(1j * angles)[None, :]

    dtheta = 2 * np.pi / angular_count
    dr = np.full(radial_count, passo)
    dr[0] *= 0.5
    dr[-1] *= 0.5
    cell_area = (radii * dr)[:, None] * dtheta * np.ones((1, angular_count))

    logger.debug("Grade amostrada", radial=radial_count, angular=angular_count, disco=domain.e_disco)
    return Grid(parent=domain, radial_count=radial_count, angular_count=angular_count,
                radii=radii, angles=angles, z=z, cell_area=cell_area)


def generator_cycle(annulus: AnnulusChart, nos: Optional[int] = None) -> Cycle:
    """Círculo de raio sqrt(rR), percorrido uma vez no sentido positivo"""
    nos = nos or QUADRATURA["nos_ciclo"]
    raio = math.sqrt(annulus.inner_radius * annulus.outer_radius)
    t = 2 * np.pi * np.arange(nos + 1) / nos
    pontos = annulus.center + raio * np.exp(1j * t)
    pontos[-1] = pontos[0]
    # trapézio no parâmetro angular: dz = i (z - c) dt
    pesos = 1j * (pontos[:-1] - annulus.center) * (2 * np.pi / nos)
    return Cycle(pontos=pontos, pesos=pesos, winding_number=1)


def _anel_da_torre(a: float, b: float, n: int) -> AnnulusChart:
    meio = 0.5 * (math.log(a) + math.log(b))
    meia_largura = 0.5 * (math.log(b) - math.log(a)) * (1.0 - 1.0 / (n + 1))
    return make_annulus(math.exp(meio - meia_largura), math.exp(meio + meia_largura))


def disco_da_alca(a: float, b: float) -> DiskChart:
    """
    V_1 da torre com alça: disco centrado em sqrt(ab) que não envolve a
    origem e cabe no interior do segundo anel da torre de (a, b).
    """
    c = math.sqrt(a * b)
    q = (a / b) ** (1.0 / 3.0)
    return make_disk(0.5 * c * (1.0 - q), center=complex(c))


def envoltoria_anular(disco: DiskChart) -> AnnulusChart:
    """Menor anel centrado na origem que contém o disco"""
    c = abs(disco.center)
    if c <= disco.radius:
        raise DomainDegenerateError("o disco contém a origem")
    return make_annulus(c - disco.radius, c + disco.radius)


def arco_da_alca(disco: DiskChart, nos: int = 129) -> Tuple[np.ndarray, np.ndarray]:
    """
    Arco que fecha o disco num laço em torno da origem.

    Devolve o arco |z| = |centro| de P1 a P2, com extremidades em ∂D, e a
    corda de retorno P2 → P1, que fica dentro do disco.
    """
    c = abs(disco.center)
    if c <= disco.radius:
        raise DomainDegenerateError("o disco contém a origem")
    alfa = 2 * math.asin(disco.radius / (2 * c))
    theta = np.linspace(alfa, 2 * np.pi - alfa, nos)
    arco = disco.center * np.exp(1j * theta)
    retorno = np.linspace(arco[-1], arco[0], 9)
    return arco, retorno


def make_exhaustion(kind: str, stages: int, raios: Optional[Sequence[float]] = None,
                    raio_interno: float = math.exp(-1), raio_externo: float = math.exp(1)) -> ExhaustionTower:
    """
    Torre de exaustão V_1 ⊂ V_2° ⊂ ...

    disk-tower: V_n = disco(n), ou disco(raios[n-1]) se `raios` for dado.
    annulus-tower: anéis fechados crescentes que tendem ao anel aberto
    raio_interno < |z| < raio_externo.
    handle-tower: V_1 é um disco fora da origem e V_n (n >= 2) são os anéis
    da annulus-tower; a passagem de V_1 a V_2 acrescenta a alça.
    """
    if stages < 1:
        raise DomainDegenerateError("a torre precisa de ao menos um estágio")

    if kind == "disk-tower":
        valores = list(raios) if raios is not None else [float(n) for n in range(1, stages + 1)]
        if len(valores) < stages:
            raise DomainDegenerateError("raios insuficientes para o número de estágios")
        regioes: List[Domain] = [make_disk(r) for r in valores[:stages]]
    elif kind == "annulus-tower":
        regioes = [_anel_da_torre(raio_interno, raio_externo, n) for n in range(1, stages + 1)]
    elif kind == "handle-tower":
        regioes = [disco_da_alca(raio_interno, raio_externo)]
        regioes += [_anel_da_torre(raio_interno, raio_externo, n) for n in range(2, stages + 1)]
    else:
        raise DomainDegenerateError(f"tipo de torre desconhecido: {kind}")

    for n in range(len(regioes) - 1):
        folga = folga_aninhamento(regioes[n], regioes[n + 1])
        if folga <= 0:
            raise DomainDegenerateError(f"V_{n + 1} não está no interior de V_{n + 2}")

    return ExhaustionTower(regions=tuple(regioes))


def _circulos_fronteira(domain: Domain, nos: int = 256) -> np.ndarray:
    t = 2 * np.pi * np.arange(nos) / nos
    externo = domain.center + domain.outer_radius * np.exp(1j * t)
    if domain.e_disco:
        return externo
    interno = domain.center + domain.inner_radius * np.exp(1j * t)
    return np.concatenate([interno, externo])


def folga_aninhamento(menor: Domain, maior: Domain) -> float:
    """Mínimo, sobre amostras de ∂(menor), da distância a ∂(maior); negativo se sai de maior"""
    amostras = _circulos_fronteira(menor)
    rho = np.abs(amostras - maior.center)
    if not np.all(maior.contem(amostras, tol=0.0)):
        return -1.0
    dist_externa = maior.outer_radius - rho
    if maior.e_disco:
        return float(dist_externa.min())
    return float(np.minimum(dist_externa, rho - maior.inner_radius).min())


def componentes_anulares(U: Domain, V: Domain) -> List[AnnulusChart]:
    """Componentes anulares de V - U para regiões concêntricas"""
    if U.center != V.center:
        raise DomainDegenerateError("U e V não são concêntricos")
    componentes = []
    if not V.e_disco and V.inner_radius < U.inner_radius:
        componentes.append(make_annulus(V.inner_radius, U.inner_radius, V.center))
    if U.outer_radius < V.outer_radius:
        componentes.append(make_annulus(U.outer_radius, V.outer_radius, V.center))
    return componentes


def make_admissible(region: Domain, arcs: Sequence[Sequence[complex]]) -> AdmissibleSet:
    """
    Conjunto admissível U ∪ arcos; cada arco toca U apenas nas extremidades,
    que devem estar em ∂U dentro da tolerância.
    """
    tol = TOLERANCIAS["fronteira_arco"]
    arcos = tuple(np.asarray(a, dtype=complex) for a in arcs)
    for k, arco in enumerate(arcos):
        for extremo in (arco[0], arco[-1]):
            rho = abs(extremo - region.center)
            na_fronteira = abs(rho - region.outer_radius) <= tol or (
                not region.e_disco and abs(rho - region.inner_radius) <= tol)
            if not na_fronteira:
                raise DomainDegenerateError(f"extremidade do arco {k} fora de ∂U")
        if len(arco) > 2 and np.any(region.contem(arco[1:-1], tol=-tol)):
            raise DomainDegenerateError(f"arco {k} penetra o interior de U")
    for a in range(len(arcos)):
        for b in range(a + 1, len(arcos)):
            d = np.abs(arcos[a][:, None] - arcos[b][None, :]).min()
            if d <= tol:
                raise DomainDegenerateError(f"arcos {a} e {b} se intersectam")
    return AdmissibleSet(region=region, arcs=arcos)


def discrete_laplacian(valores: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Laplaciano discreto em coordenadas polares (f_rr + f_r/r + f_θθ/r²)
    nos nós interiores; nan nas linhas de fronteira e no centro do disco.
    """
    f = np.asarray(valores, dtype=float).reshape(grid.radial_count, grid.angular_count)
    h = grid.passo_radial
    dt = grid.passo_angular
    lap = np.full_like(f, np.nan)
    r = grid.radii[1:-1, None]
    interior = f[1:-1]
    f_rr = (f[2:] - 2 * interior + f[:-2]) / h ** 2
    f_r = (f[2:] - f[:-2]) / (2 * h)
    f_tt = (np.roll(interior, -1, axis=1) - 2 * interior + np.roll(interior, 1, axis=1)) / dt ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lap[1:-1] = f_rr + f_r / r + f_tt / r ** 2
    return lap
