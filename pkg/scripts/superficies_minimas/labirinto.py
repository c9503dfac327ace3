"""
Labirinto de conjuntos compactos K_{j,n} num subanel C_j, constantes μ e M,
deformação com g ≡ M e verificação pontual da cota inferior da métrica.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from configuracao import LABIRINTO, TOLERANCIAS
from dominio_plano import AnnulusChart, Domain, Grid, fits_labyrinth, make_annulus, sample_grid
from erros import LabyrinthFitError, PreconditionError, ResolutionError, VerificationFailure
from nucleo_weierstrass import (Forma, GaussPair, LaurentPoly, MetricField, WeierstrassTriple,
                                from_gauss_pair)

logger = structlog.get_logger()


@dataclass(frozen=True)
class Banda:
    n: int
    raio_min: float
    raio_max: float

    @property
    def sinal(self) -> int:
        return -1 if self.n % 2 else 1


@dataclass(frozen=True)
class LabyrinthSpec:
    parent: AnnulusChart
    N: int
    bands: Tuple[Banda, ...]

    @property
    def abertura(self) -> float:
        """Meia abertura angular da fenda, 1/N²"""
        return 1.0 / self.N ** 2

    def s(self, n: int) -> float:
        return self.parent.outer_radius - n / self.N ** 3

    def banda_de(self, z) -> np.ndarray:
        """Índice n da banda que contém cada ponto (0 fora do labirinto)"""
        tol = TOLERANCIAS["membro_banda"]
        z = np.asarray(z, dtype=complex) - self.parent.center
        rho = np.abs(z)
        N3 = self.N ** 3
        candidato = np.floor((self.parent.outer_radius - rho) * N3).astype(int) + 1
        resultado = np.zeros(z.shape, dtype=int)
        total = len(self.bands)
        for deslocamento in (-1, 0, 1):
            n = candidato + deslocamento
            validos = (n >= 1) & (n <= total) & (resultado == 0)
            if not np.any(validos):
                continue
            n_seguro = np.clip(n, 1, total)
            rmin = np.array([b.raio_min for b in self.bands])[n_seguro - 1]
            rmax = np.array([b.raio_max for b in self.bands])[n_seguro - 1]
            no_raio = (rho >= rmin - tol) & (rho <= rmax + tol)
            sinal = np.where(n_seguro % 2 == 1, -1.0, 1.0)
            arg = np.mod(np.angle(sinal * z), 2 * np.pi)
            no_setor = (arg >= self.abertura - tol) & (arg <= 2 * np.pi - self.abertura + tol)
            resultado = np.where(validos & no_raio & no_setor, n_seguro, resultado)
        return resultado

    def contem(self, z) -> np.ndarray:
        return self.banda_de(z) > 0

    def to_dict(self) -> Dict:
        return {
            "N": self.N,
            "raio_interno": self.parent.inner_radius,
            "raio_externo": self.parent.outer_radius,
            "abertura_fenda": self.abertura,
            "bandas": [{"n": b.n, "raio_min": b.raio_min, "raio_max": b.raio_max,
                        "fenda_em": 0.0 if b.sinal > 0 else math.pi} for b in self.bands],
        }


@dataclass(frozen=True)
class DeformParams:
    mu: float
    M: float

    def acima_do_limiar(self, N: int) -> bool:
        return self.M > 2 * N ** 4


@dataclass
class RelatorioLimite:
    N: int
    M: float
    mu: float
    razao_minima: float
    razao_intermediaria: float
    no_pior: int
    nos_verificados: int
    cota_pontual_ok: bool
    cota_global_ok: bool
    M_acima_do_limiar: bool

    @property
    def margem(self) -> float:
        return self.razao_minima - 1.0

    @property
    def aprovado(self) -> bool:
        return (self.razao_minima > 1.0 and self.razao_intermediaria > 1.0
                and self.cota_pontual_ok and self.cota_global_ok)

    def to_dict(self) -> Dict:
        return {"N": self.N, "M": self.M, "mu": self.mu, "razao_minima": self.razao_minima,
                "razao_intermediaria": self.razao_intermediaria, "margem": self.margem,
                "no_pior": self.no_pior, "nos_verificados": self.nos_verificados,
                "cota_pontual_ok": self.cota_pontual_ok, "cota_global_ok": self.cota_global_ok,
                "M_acima_do_limiar": self.M_acima_do_limiar, "aprovado": self.aprovado}


def N_minimo(C: Domain) -> int:
    """Menor N >= 2 com 2/N < R - r"""
    return max(2, int(math.floor(2.0 / C.largura)) + 1)


def build_labyrinth(C: AnnulusChart, N: int) -> LabyrinthSpec:
    if not fits_labyrinth(C, N):
        raise LabyrinthFitError(
            f"anel fino demais para N={N}: R - r = {C.largura:.6g} <= 2/N = {2.0 / N:.6g}")
    N3 = float(N ** 3)
    R = C.outer_radius
    s = [R - n / N3 for n in range(2 * N ** 2 + 1)]
    bandas = tuple(Banda(n=n, raio_min=s[n] + 1 / (4 * N3), raio_max=s[n - 1] - 1 / (4 * N3))
                   for n in range(1, 2 * N ** 2 + 1))
    logger.debug("Labirinto construído", N=N, bandas=len(bandas), r=C.inner_radius, R=R)
    return LabyrinthSpec(parent=C, N=N, bands=bandas)


def _valores_phi3(phi3, pontos: np.ndarray) -> np.ndarray:
    if isinstance(phi3, WeierstrassTriple):
        phi3 = phi3.phi3
    return phi3.avaliar(pontos)


def compute_mu(phi3, C: Domain, grid: Grid) -> float:
    """μ = fator · min |φ3/dz| sobre os nós de C"""
    pontos = grid.nodes[C.contem(grid.nodes)]
    if len(pontos) == 0:
        raise ResolutionError("nenhum nó da grade em C_j")
    minimo = float(np.min(np.abs(_valores_phi3(phi3, pontos))))
    if not np.isfinite(minimo) or minimo <= TOLERANCIAS["zero_phi3"]:
        raise PreconditionError(f"φ3 se anula em C_j (mínimo {minimo:.3g}); encolha C_j")
    return LABIRINTO["fator_mu"] * minimo


def default_M(N: int) -> float:
    return float(LABIRINTO["fator_M"] * N ** 4)


def lopez_ros_deform(phi3: Forma, M: float, carrier: Domain) -> WeierstrassTriple:
    """(½(1/M − M)φ3, (i/2)(1/M + M)φ3, φ3), isto é g ≡ M"""
    if M <= 0:
        raise PreconditionError(f"M deve ser positivo: {M}")
    return from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=phi3, m=0, fator=M), carrier)


def escolher_subanel(A: AnnulusChart, phi3: Forma, radial: int = 16, angular: int = 64) -> AnnulusChart:
    """
    C_j concêntrico a A_j com recuo de 10% de cada círculo, aumentado em
    passos de 10% enquanto φ3 tiver zero próximo.
    """
    recuo = LABIRINTO["recuo_subanel"]
    while recuo <= LABIRINTO["recuo_maximo"] + 1e-12:
        folga = recuo * A.largura
        C = make_annulus(A.inner_radius + folga, A.outer_radius - folga, A.center)
        grade = sample_grid(C, radial, angular)
        if np.min(np.abs(_valores_phi3(phi3, grade.nodes))) > TOLERANCIAS["zero_phi3"]:
            return C
        recuo += LABIRINTO["recuo_subanel"]
    raise PreconditionError("não há subanel de A_j sem zeros de φ3")


def amostras_bandas(spec: LabyrinthSpec, radiais: Optional[int] = None,
                    angulares: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Pontos de colocação dentro das bandas.

    Devolve (pontos, banda, argumento contínuo de z na banda); o argumento
    cresce continuamente ao longo da banda, sem atravessar a fenda.
    """
    radiais = radiais or LABIRINTO["amostras_radiais_banda"]
    angulares = angulares or LABIRINTO["amostras_angulares_banda"]
    pontos, bandas, argumentos = [], [], []
    theta = np.linspace(spec.abertura, 2 * np.pi - spec.abertura, angulares)
    for banda in spec.bands:
        fracoes = (np.arange(radiais) + 1) / (radiais + 1)
        raios = banda.raio_min + fracoes * (banda.raio_max - banda.raio_min)
        deslocamento = 0.0 if banda.sinal > 0 else math.pi
        arg = theta[None, :] + deslocamento + 0 * raios[:, None]
        z = spec.parent.center + raios[:, None] * np.exp(1j * arg)
        pontos.append(z.ravel())
        bandas.append(np.full(z.size, banda.n))
        argumentos.append(arg.ravel())
    return np.concatenate(pontos), np.concatenate(bandas), np.concatenate(argumentos)


def linhas_por_banda(spec: LabyrinthSpec, grid: Grid) -> np.ndarray:
    tol = TOLERANCIAS["membro_banda"]
    rho = grid.radii
    return np.array([np.count_nonzero((rho >= b.raio_min - tol) & (rho <= b.raio_max + tol))
                     for b in spec.bands])


def verify_metric_bound(deformed: WeierstrassTriple, spec: LabyrinthSpec, params: DeformParams,
                        grid: Grid) -> RelatorioLimite:
    """
    Verifica λ² > ¼(1/M + M)² μ² > N⁸ μ² nos nós de 𝒦 e λ² >= |φ3|² > μ² em C.

    Nós fora do labirinto não entram na razão mínima.
    """
    linhas = linhas_por_banda(spec, grid)
    minimo_linhas = LABIRINTO["amostras_minimas_banda"]
    if np.any(linhas < minimo_linhas):
        n = int(np.argmin(linhas)) + 1
        raise ResolutionError(
            f"banda {n} tem {int(linhas.min())} linhas radiais (mínimo {minimo_linhas})")

    N, M, mu = spec.N, params.M, params.mu
    nos = grid.nodes
    em_C = spec.parent.contem(nos)
    em_K = spec.contem(nos) & em_C
    valores = deformed.avaliar(nos)
    lambda2 = np.sum(np.abs(valores) ** 2, axis=0)
    phi3_abs2 = np.abs(valores[2]) ** 2

    N8 = float(N) ** 8
    razao = lambda2[em_K] / (N8 * mu ** 2)
    indices_K = np.nonzero(em_K)[0]
    pior = int(indices_K[np.argmin(razao)])
    fator = 0.25 * (1.0 / M + M) ** 2
    relatorio = RelatorioLimite(
        N=N, M=M, mu=mu,
        razao_minima=float(razao.min()),
        razao_intermediaria=fator / N8,
        no_pior=pior,
        nos_verificados=int(em_K.sum()),
        cota_pontual_ok=bool(np.all(lambda2[em_K] >= fator * phi3_abs2[em_K] * (1 - 1e-12))),
        cota_global_ok=bool(np.all((lambda2[em_C] >= phi3_abs2[em_C] * (1 - 1e-12))
                                   & (phi3_abs2[em_C] > mu ** 2))),
        M_acima_do_limiar=params.acima_do_limiar(N),
    )
    logger.info("Cota da métrica verificada", **{k: v for k, v in relatorio.to_dict().items()
                                                   if k in ("N", "M", "razao_minima", "margem")})
    if not relatorio.aprovado:
        raise VerificationFailure(
            f"cota da métrica violada: razão mínima {relatorio.razao_minima:.6g}",
            no_pior=pior, margem=relatorio.margem)
    return relatorio


def labyrinth_metric(spec: LabyrinthSpec, phi3: Forma, M: float, grid: Grid,
                     base: Optional[MetricField] = None) -> MetricField:
    """
    Métrica do labirinto: a da tripla deformada (g ≡ M) nos nós de 𝒦 e,
    fora dele, `base` ou a cota |φ3/dz|² garantida em C_j.
    """
    nos = grid.nodes
    em_K = spec.contem(nos)
    valores_phi3 = phi3.avaliar(nos)
    if base is None:
        lambda2 = np.abs(valores_phi3) ** 2
    else:
        lambda2 = base.lambda2.ravel().copy()
    fator = 1.0 + 0.5 * (M ** 2 + M ** -2)
    lambda2 = np.where(em_K, fator * np.abs(valores_phi3) ** 2, lambda2)
    return MetricField(grid=grid, lambda2=lambda2.reshape(grid.z.shape))
