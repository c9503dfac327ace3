"""
Orquestração das construções: um estágio de completude, a recursão com
coordenada harmônica prescrita e a recursão com φ3 sem zeros.

O primeiro estágio de cada recursão é a própria semente. Os demais:
1. Constroem o labirinto em cada componente anular de V − U e verificam a
   cota da métrica da deformação g ≡ M.
2. Aproximam (g de X em U, g ≡ M em 𝒦) por dados de Gauss globais em V.
3. Contraem a aproximação em direção a X até a mudança em U caber em ε.
4. Medem a distância intrínseca de P0 a ∂V e escalam N se o alvo falhar.

Quando U é um disco fora da origem e V um anel em torno dela, o estágio
primeiro acrescenta a alça (arco marcado mais aproximação) e só então
segue os passos acima a partir da envoltória anular de U.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from aproximacao_runge import (alvo_de_regiao_e_arco, alvo_de_tripla, alvo_labirinto, blend, blend_em_grau,
                               como_exp, corrigir_periodos, extend_along_arc)
from configuracao import APROXIMACAO, CONSTRUCAO, TOLERANCIAS
from dominio_plano import (AnnulusChart, Domain, DiskChart, ExhaustionTower, Grid, arco_da_alca,
                           componentes_anulares, cycle_from_polyline, envoltoria_anular, espessura_banda,
                           folga_aninhamento, generator_cycle, make_admissible, sample_grid)
from erros import (ApproximationBudgetError, ConfigError, NonvanishingViolation,
                   PreconditionError, StageFailure, SuperficieMinimaError)
from labirinto import (DeformParams, N_minimo, build_labyrinth, compute_mu, default_M,
                       escolher_subanel, lopez_ros_deform, verify_metric_bound)
from metricas_completude import distance_to_boundary, metric_graph
from nucleo_weierstrass import (ExpLaurent, Forma, GaussPair, ImmersionField, LaurentPoly,
                                WeierstrassTriple, flux, from_gauss_pair, gauss_map, induced_metric,
                                integrate_immersion)

logger = structlog.get_logger()


# ---------------------------------------------------------------------------
# Prescrição harmônica
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HarmonicPrescription:
    """
    h harmônica dada por φ3 = 2∂h e o vetor de fluxo p no gerador.

    Quando φ3 é Laurent, h = Re(P + a log z) com P' + a/z = φ3/dz e a real.
    """

    nome: str
    phi3: Forma
    fluxo: np.ndarray
    primitiva: Optional[LaurentPoly] = None
    residuo: float = 0.0

    def h(self, z) -> np.ndarray:
        if self.primitiva is None:
            raise PreconditionError(f"h sem forma fechada para a prescrição '{self.nome}'")
        z = np.asarray(z, dtype=complex)
        valor = np.real(self.primitiva.avaliar(z))
        if self.residuo:
            valor = valor + self.residuo * np.log(np.abs(z))
        return valor

    def h_na_grade(self, grid: Grid, basepoint: complex) -> np.ndarray:
        """h − h(P0) nos nós da grade"""
        if self.primitiva is not None:
            return (self.h(grid.z) - self.h(basepoint)).reshape(grid.z.shape)
        referencia = from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=self.phi3), grid.parent)
        return integrate_immersion(referencia, basepoint, grid).valores[2]

    @property
    def terceira_componente(self) -> float:
        """Im∮φ3 no gerador, igual a 2π·a"""
        return 2 * math.pi * self.residuo

    def to_dict(self) -> Dict:
        return {"nome": self.nome, "phi3": self.phi3.to_dict(),
                "fluxo": [float(v) for v in self.fluxo], "residuo": self.residuo}


CATALOGO_H = ("re-z", "log-abs", "custom")


def triple_from_harmonic(nome: str, fluxo: Sequence[float] = (0.0, 0.0, 0.0),
                         coeficientes: Optional[Sequence[complex]] = None,
                         k_min: int = 0) -> HarmonicPrescription:
    """
    Prescrição a partir do catálogo: "re-z" (h = Re z), "log-abs"
    (h = log|z|) ou "custom" (φ3 dado por coeficientes de Laurent).
    """
    if nome == "re-z":
        phi3 = LaurentPoly.constante(1.0)
    elif nome == "log-abs":
        phi3 = LaurentPoly.monomio(-1, 1.0)
    elif nome == "custom":
        if not coeficientes:
            raise ConfigError("coeficientes ausentes para h customizada", campo="prescricao.coeficientes")
        phi3 = LaurentPoly(np.asarray(coeficientes, dtype=complex), int(k_min))
    else:
        raise ConfigError(f"h desconhecida: {nome}", campo="prescricao.h")

    primitiva, residuo = phi3.primitiva()
    if abs(np.imag(residuo)) > TOLERANCIAS["fluxo"]:
        raise ConfigError("resíduo de φ3 não é real: h seria multivalorada", campo="prescricao.coeficientes")
    prescricao = HarmonicPrescription(nome=nome, phi3=phi3, fluxo=np.asarray(fluxo, dtype=float),
                                      primitiva=primitiva,
                                      residuo=float(np.real(residuo)))
    verificar_compatibilidade(prescricao)
    return prescricao


def prescricao_de_forma(phi3: Forma, fluxo: Sequence[float] = (0.0, 0.0, 0.0),
                        nome: str = "composta") -> HarmonicPrescription:
    """Prescrição h = Re∫φ3 para φ3 em forma exponencial (sem forma fechada)"""
    return HarmonicPrescription(nome=nome, phi3=phi3, fluxo=np.asarray(fluxo, dtype=float))


def verificar_compatibilidade(prescricao: HarmonicPrescription) -> None:
    """A terceira componente do fluxo deve ser Im∮∂h-dado, isto é 2π·a"""
    esperado = prescricao.terceira_componente
    if abs(prescricao.fluxo[2] - esperado) > TOLERANCIAS["fluxo"]:
        raise ConfigError(
            f"terceira componente do fluxo deve ser {esperado:.9g} (Im∮φ3), recebido {prescricao.fluxo[2]:.9g}",
            campo="fluxo[2]")


def ponto_base(V1: Domain) -> complex:
    """Centro de V1 no disco; no anel, o ponto real do círculo gerador"""
    if V1.e_disco:
        return complex(V1.center)
    return complex(V1.center + math.sqrt(V1.inner_radius * V1.outer_radius))


def semente(prescricao: HarmonicPrescription, V1: Domain,
            newton_max_iter: Optional[int] = None) -> WeierstrassTriple:
    """
    Dados iniciais em V1 com φ3 da prescrição: g = z^m com m = 1 quando φ3
    tem resíduo (catenoide) e m igual à ordem do zero de φ3 na origem no
    disco; no anel os períodos são corrigidos por Newton.

    Num disco fora da origem os dados vivem na envoltória anular do disco,
    sem correção: o laço em torno da origem ainda não pertence à superfície.
    """
    phi3 = prescricao.phi3
    if V1.e_disco and V1.center != 0:
        m = 1 if prescricao.residuo else 0
        return from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=phi3, m=m), envoltoria_anular(V1))
    if V1.e_disco:
        if prescricao.residuo:
            raise PreconditionError("φ3 com resíduo não é holomorfa no disco")
        m = phi3.ordem_origem()
        return from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=phi3, m=m), V1)
    m = 1 if prescricao.residuo else 0
    par = GaussPair(u=LaurentPoly.zero(), eta3=phi3, m=m)
    par, _ = corrigir_periodos(par, V1, prescricao.fluxo, max_iter=newton_max_iter)
    return from_gauss_pair(par, V1)


# ---------------------------------------------------------------------------
# Relatórios
# ---------------------------------------------------------------------------

@dataclass
class StageReport:
    stage: int
    sup_change: float
    sup_change_target: float
    distance: float
    distance_target: float
    flux_err: float
    h_err: float
    min_phi3: float
    N: int
    M: float
    mu: float
    razao_labirinto: float = 0.0
    t_contracao: float = 1.0
    escalonamentos: int = 0

    @property
    def mudanca_ok(self) -> bool:
        return self.sup_change < self.sup_change_target

    @property
    def distancia_ok(self) -> bool:
        return self.distance > self.distance_target

    @property
    def aprovado(self) -> bool:
        return self.mudanca_ok and self.distancia_ok

    def to_dict(self) -> Dict:
        return {"stage": self.stage, "sup_change": self.sup_change,
                "sup_change_target": self.sup_change_target, "distance": self.distance,
                "distance_target": self.distance_target, "flux_err": self.flux_err,
                "h_err": self.h_err, "min_phi3": self.min_phi3, "N": self.N, "M": self.M,
                "mu": self.mu, "razao_labirinto": self.razao_labirinto,
                "t_contracao": self.t_contracao, "escalonamentos": self.escalonamentos,
                "aprovado": self.aprovado}


@dataclass(eq=False)
class ResultadoConstrucao:
    relatorios: List[StageReport]
    tripla: WeierstrassTriple
    campo: ImmersionField
    mudanca_acumulada: float
    lambda2_minimo: float
    telescopio_V1: float
    extras: Dict = field(default_factory=dict)

    def resumo(self) -> Dict:
        return {"estagios": len(self.relatorios),
                "aprovados": sum(r.aprovado for r in self.relatorios),
                "mudanca_acumulada": self.mudanca_acumulada,
                "lambda2_minimo": self.lambda2_minimo,
                "telescopio_V1": self.telescopio_V1, **self.extras}


# ---------------------------------------------------------------------------
# Estágio
# ---------------------------------------------------------------------------

def _grade_labirinto(C: AnnulusChart, N: int) -> Grid:
    """Grade em C_j com ao menos 3 linhas radiais por banda"""
    radial = int(math.ceil(4 * C.largura / espessura_banda(N))) + 1
    return sample_grid(C, radial, CONSTRUCAO["grade_angular"], N=N)


def _grade_regiao(U: Domain) -> Grid:
    return sample_grid(U, CONSTRUCAO["grade_regiao_radial"], CONSTRUCAO["grade_regiao_angular"])


def _u_com_fator(par: GaussPair) -> LaurentPoly:
    return par.u + LaurentPoly.constante(np.log(complex(par.fator)))


def _e_passo_de_alca(U: Domain, V: Domain) -> bool:
    return U.e_disco and not V.e_disco and U.center != V.center


class ConstrutorCompletude:
    """
    Executa estágios de completude sobre uma prescrição.

    Em modo `nao_nulo` o φ3 é reaproximado em forma exponencial a cada
    estágio; caso contrário fica fixo (terceira coordenada = h). `grau` e
    `newton_max_iter` valem para todas as aproximações do construtor.
    """

    def __init__(self, prescricao: HarmonicPrescription, basepoint: complex,
                 nao_nulo: bool = False, grau: Optional[int] = None,
                 newton_max_iter: Optional[int] = None):
        self.prescricao = prescricao
        self.basepoint = basepoint
        self.nao_nulo = nao_nulo
        self.grau = grau or APROXIMACAO["grau_estagio"]
        self.newton_max_iter = newton_max_iter

    # -- partes do estágio ---------------------------------------------------

    def preparar_labirintos(self, X: WeierstrassTriple, U: Domain, V: Domain,
                            escalonamento: int) -> Tuple[list, list, list, list]:
        """Labirinto, μ, M e relatório da cota por componente anular de V − U"""
        labirintos, Ms, mus, razoes = [], [], [], []
        for A in componentes_anulares(U, V):
            C = escolher_subanel(A, X.phi3)
            N = N_minimo(C) * 2 ** escalonamento
            spec = build_labyrinth(C, N)
            mu = compute_mu(X.phi3, C, sample_grid(C, 16, CONSTRUCAO["grade_angular"]))
            M = default_M(N)
            relatorio = verify_metric_bound(lopez_ros_deform(X.phi3, M, C), spec,
                                            DeformParams(mu=mu, M=M), _grade_labirinto(C, N))
            labirintos.append(spec)
            Ms.append(M)
            mus.append(mu)
            razoes.append(relatorio.razao_minima)
        return labirintos, Ms, mus, razoes

    def contrair(self, par_X: GaussPair, par_W: GaussPair, t: float, V: Domain) -> WeierstrassTriple:
        """u_t = u_X + t(u_W − u_X), com correção de períodos para cada t"""
        u_X = _u_com_fator(par_X)
        u_t = u_X + (_u_com_fator(par_W) - u_X).escalar(t)
        eta3 = par_X.eta3
        if self.nao_nulo:
            f_X = como_exp(par_X.eta3)
            f_W = como_exp(par_W.eta3)
            eta3 = ExpLaurent(f_X.f + (f_W.f - f_X.f).escalar(t), f_X.m)
        par = GaussPair(u=u_t, eta3=eta3, m=par_X.m)
        if not V.e_disco:
            par, _ = corrigir_periodos(par, V, self.prescricao.fluxo, incluir_phi3=self.nao_nulo,
                                       max_iter=self.newton_max_iter)
        return from_gauss_pair(par, V)

    def medir(self, Y: WeierstrassTriple, V: Domain, X: WeierstrassTriple,
              U: Optional[Domain]) -> Dict:
        grade_V = sample_grid(V, CONSTRUCAO["grade_radial"], CONSTRUCAO["grade_angular"])
        campo = integrate_immersion(Y, self.basepoint, grade_V)
        grafo = metric_graph(grade_V, induced_metric(Y, grade_V))
        distancia = distance_to_boundary(grafo, grade_V.no_mais_proximo(self.basepoint))
        erro_fluxo = 0.0
        if not V.e_disco:
            erro_fluxo = float(np.max(np.abs(flux(Y, generator_cycle(V)) - self.prescricao.fluxo)))
        if self.nao_nulo:
            # sem h fixa: deriva da terceira coordenada em U
            erro_h = 0.0
            if U is not None:
                grade_U = _grade_regiao(U)
                erro_h = float(np.max(np.abs(integrate_immersion(Y, self.basepoint, grade_U).valores[2]
                                             - integrate_immersion(X, self.basepoint, grade_U).valores[2])))
        else:
            erro_h = float(np.max(np.abs(campo.valores[2] - self.prescricao.h_na_grade(grade_V, self.basepoint))))
        min_phi3 = float(np.min(np.abs(Y.phi3.avaliar(grade_V.nodes))))
        return {"campo": campo, "distancia": distancia, "erro_fluxo": erro_fluxo,
                "erro_h": erro_h, "min_phi3": min_phi3}

    def escalar_grau(self, alvo, V: Domain, grade_U: Grid, campo_X: ImmersionField,
                     epsilon: float) -> Tuple[WeierstrassTriple, float]:
        """Menor grau escalonado cuja aproximação muda a imersão em U menos que ε"""
        graus = [k for k in APROXIMACAO["graus_escalonados"] if k < self.grau] + [self.grau]
        melhor = math.inf
        for k in graus:
            resultado = blend_em_grau(alvo, k, V, max_iter=self.newton_max_iter)
            mudanca = integrate_immersion(resultado.tripla, self.basepoint, grade_U).sup_distancia(campo_X)
            logger.debug("Grau avaliado", grau=k, mudanca=mudanca)
            if mudanca < epsilon:
                return resultado.tripla, mudanca
            melhor = min(melhor, mudanca)
        raise ApproximationBudgetError(
            f"mudança {melhor:.3g} em U acima de ε = {epsilon:.3g} até o grau {self.grau}", residuo=melhor)

    # -- estágios ------------------------------------------------------------

    def estagio_semente(self, X: WeierstrassTriple, V: Domain, epsilon: float) -> StageReport:
        """Relatório do estágio 1, em que Y_1 é a própria semente"""
        medidas = self.medir(X, V, X, None)
        relatorio = StageReport(stage=1, sup_change=0.0, sup_change_target=epsilon,
                                distance=medidas["distancia"], distance_target=0.0,
                                flux_err=medidas["erro_fluxo"], h_err=medidas["erro_h"],
                                min_phi3=medidas["min_phi3"], N=0, M=1.0, mu=0.0)
        logger.info("Semente medida", **relatorio.to_dict())
        return relatorio

    def estagio(self, X: WeierstrassTriple, U: Optional[Domain], V: Domain, epsilon: float,
                n: int = 2, distancia_alvo: Optional[float] = None) -> Tuple[WeierstrassTriple, StageReport]:
        distancia_alvo = 1.0 / epsilon if distancia_alvo is None else distancia_alvo
        if X.par is None:
            raise PreconditionError("X precisa de dados de Gauss")
        if U is None:
            raise PreconditionError("o estágio precisa de uma região U onde X está definida")
        if U == V:
            return self._estagio_trivial(X, V, epsilon, n, distancia_alvo)
        if folga_aninhamento(U, V) <= 0:
            raise PreconditionError("U não está no interior de V")
        if _e_passo_de_alca(U, V):
            return self._estagio_alca(X, U, V, epsilon, n, distancia_alvo)
        return self._estagio_labirinto(X, U, V, epsilon, n, distancia_alvo)

    def _estagio_labirinto(self, X: WeierstrassTriple, U: Domain, V: Domain, epsilon: float, n: int,
                           distancia_alvo: float) -> Tuple[WeierstrassTriple, StageReport]:
        grade_U = _grade_regiao(U)
        campo_X = integrate_immersion(X, self.basepoint, grade_U)

        ultimo: Dict = {}
        for escalonamento in range(CONSTRUCAO["escalonamentos_N"] + 1):
            labirintos, Ms, mus, razoes = self.preparar_labirintos(X, U, V, escalonamento)
            fluxo = None if V.e_disco else self.prescricao.fluxo
            alvo = alvo_labirinto(X.par, grade_U.nodes, labirintos, Ms, fluxo=fluxo,
                                  nonvanishing_phi3=self.nao_nulo)
            aproximacao = blend(alvo, self.grau, V, max_iter=self.newton_max_iter)

            Y, mudanca, t = self._contracao(X, aproximacao.tripla, V, grade_U, campo_X, epsilon)
            medidas = self.medir(Y, V, X, U)
            if self.nao_nulo and medidas["min_phi3"] <= TOLERANCIAS["zero_phi3"]:
                raise NonvanishingViolation(f"φ3 se anula no estágio {n}", minimo=medidas["min_phi3"])

            relatorio = StageReport(
                stage=n, sup_change=mudanca, sup_change_target=epsilon,
                distance=medidas["distancia"], distance_target=distancia_alvo,
                flux_err=medidas["erro_fluxo"], h_err=medidas["erro_h"], min_phi3=medidas["min_phi3"],
                N=max(s.N for s in labirintos), M=max(Ms), mu=min(mus),
                razao_labirinto=min(razoes), t_contracao=t, escalonamentos=escalonamento)
            ultimo = relatorio.to_dict()
            if relatorio.distancia_ok:
                logger.info("Estágio concluído", **relatorio.to_dict())
                return Y, relatorio
            logger.warning("Distância abaixo do alvo, escalando N", estagio=n,
                           distancia=relatorio.distance, alvo=distancia_alvo, N=relatorio.N)

        raise StageFailure(f"estágio {n}: alvo de distância {distancia_alvo:.6g} não atingido",
                           diagnostico=ultimo)

    def _estagio_alca(self, X: WeierstrassTriple, U: DiskChart, V: Domain, epsilon: float, n: int,
                      distancia_alvo: float) -> Tuple[WeierstrassTriple, StageReport]:
        """
        Acrescenta a alça: estende X ao longo do arco que fecha U num laço em
        torno da origem, aproxima (X em U, dado marcado no arco) em V e
        completa a partir da envoltória anular de U. Cada passo usa ε/2.
        """
        arco, retorno = arco_da_alca(U)
        S = make_admissible(U, [arco])
        marcado = extend_along_arc(X, S.arcs[0], self.prescricao.fluxo, retorno=retorno,
                                   max_iter=self.newton_max_iter)
        grade_U = _grade_regiao(U)
        campo_X = integrate_immersion(X, self.basepoint, grade_U)
        alvo = alvo_de_regiao_e_arco(X, U, grade_U.nodes, marcado, retorno, fluxo=self.prescricao.fluxo)
        W, mudanca_arco = self.escalar_grau(alvo, V, grade_U, campo_X, 0.5 * epsilon)

        laco = cycle_from_polyline(np.concatenate([S.arcs[0], retorno[1:]]), winding_number=1)
        logger.info("Alça acrescentada", estagio=n, m=W.par.m, mudanca=mudanca_arco,
                    fluxo_laco=flux(W, laco).tolist())

        Y, relatorio = self._estagio_labirinto(W, envoltoria_anular(U), V, 0.5 * epsilon, n, distancia_alvo)
        mudanca = integrate_immersion(Y, self.basepoint, grade_U).sup_distancia(campo_X)
        return Y, replace(relatorio, sup_change=mudanca, sup_change_target=epsilon)

    def estagio_nao_nulo(self, X: WeierstrassTriple, U: Optional[Domain], V: Domain, epsilon: float,
                         n: int = 2, distancia_alvo: float = 0.0) -> Tuple[WeierstrassTriple, StageReport]:
        """
        Estágio da recursão sem zeros: aproxima X em U por z^m3·e^f global em
        V, no menor grau que muda a imersão em U menos que ε. Não há labirinto
        nem alvo de distância.
        """
        if X.par is None:
            raise PreconditionError("X precisa de dados de Gauss")
        if U is None:
            raise PreconditionError("o estágio precisa de uma região U onde X está definida")
        grade_U = _grade_regiao(U)
        campo_X = integrate_immersion(X, self.basepoint, grade_U)
        alvo = alvo_de_tripla(X, grade_U.nodes, fix_phi3=False, nonvanishing_phi3=True, grade=grade_U)
        Y, mudanca = self.escalar_grau(alvo, V, grade_U, campo_X, epsilon)
        medidas = self.medir(Y, V, X, U)
        if medidas["min_phi3"] <= TOLERANCIAS["zero_phi3"]:
            raise NonvanishingViolation(f"φ3 se anula no estágio {n}", minimo=medidas["min_phi3"])
        relatorio = StageReport(stage=n, sup_change=mudanca, sup_change_target=epsilon,
                                distance=medidas["distancia"], distance_target=distancia_alvo,
                                flux_err=medidas["erro_fluxo"], h_err=medidas["erro_h"],
                                min_phi3=medidas["min_phi3"], N=0, M=1.0, mu=0.0)
        logger.info("Estágio sem zeros concluído", **relatorio.to_dict())
        return Y, relatorio

    def _contracao(self, X: WeierstrassTriple, W: WeierstrassTriple, V: Domain, grade_U: Grid,
                   campo_X: ImmersionField, epsilon: float) -> Tuple[WeierstrassTriple, float, float]:
        t = 1.0
        mudanca = math.inf
        for _ in range(CONSTRUCAO["cortes_contracao"]):
            Y = self.contrair(X.par, W.par, t, V)
            mudanca = integrate_immersion(Y, self.basepoint, grade_U).sup_distancia(campo_X)
            if mudanca < epsilon:
                return Y, mudanca, t
            t *= 0.5
        raise ApproximationBudgetError(
            f"mudança {mudanca:.3g} em U acima de ε = {epsilon:.3g} mesmo após contração", residuo=mudanca)

    def _estagio_trivial(self, X: WeierstrassTriple, V: Domain, epsilon: float, n: int,
                         distancia_alvo: float) -> Tuple[WeierstrassTriple, StageReport]:
        Y = from_gauss_pair(X.par, V)
        medidas = self.medir(Y, V, X, None)
        relatorio = StageReport(stage=n, sup_change=0.0, sup_change_target=epsilon,
                                distance=medidas["distancia"], distance_target=distancia_alvo,
                                flux_err=medidas["erro_fluxo"], h_err=medidas["erro_h"],
                                min_phi3=medidas["min_phi3"], N=0, M=1.0, mu=0.0)
        logger.info("Estágio trivial (V = U)", estagio=n)
        return Y, relatorio


def completeness_stage(X: WeierstrassTriple, U: Domain, V: Domain,
                       prescription: HarmonicPrescription, eps: float, n: int = 2,
                       basepoint: Optional[complex] = None, nao_nulo: bool = False,
                       distancia_alvo: Optional[float] = None, grau: Optional[int] = None,
                       newton_max_iter: Optional[int] = None) -> Tuple[WeierstrassTriple, StageReport]:
    """Um estágio de completude de X em U para Y em V"""
    if U is None:
        raise PreconditionError("o estágio precisa de uma região U onde X está definida")
    if basepoint is None:
        basepoint = ponto_base(U)
    construtor = ConstrutorCompletude(prescription, basepoint, nao_nulo=nao_nulo, grau=grau,
                                      newton_max_iter=newton_max_iter)
    return construtor.estagio(X, U, V, eps, n=n, distancia_alvo=distancia_alvo)


# ---------------------------------------------------------------------------
# Recursões
# ---------------------------------------------------------------------------

def _validar_estagios(tower: ExhaustionTower, stages: int) -> int:
    if stages < 1 or stages > CONSTRUCAO["estagios_maximo"]:
        raise PreconditionError(f"número de estágios fora de [1, {CONSTRUCAO['estagios_maximo']}]: {stages}")
    if stages > len(tower):
        raise PreconditionError(f"a torre tem {len(tower)} regiões, {stages} estágios pedidos")
    return stages


def _recursao(construtor: ConstrutorCompletude, X: WeierstrassTriple, tower: ExhaustionTower,
              stages: int, epsilons: Callable[[int], float], alvos: Callable[[int], float],
              passo: Optional[Callable] = None) -> ResultadoConstrucao:
    """Y_1 = X em V_1; para n >= 2, Y_n sai do estágio de Y_{n-1} em V_{n-1} para V_n"""
    passo = passo or construtor.estagio
    grade_V1 = _grade_regiao(tower[0])
    campo_V1 = integrate_immersion(X, construtor.basepoint, grade_V1)
    relatorios: List[StageReport] = [construtor.estagio_semente(X, tower[0], epsilons(1))]
    Y = X
    for n in range(2, stages + 1):
        try:
            Y, relatorio = passo(Y, tower[n - 2], tower[n - 1], epsilons(n), n=n, distancia_alvo=alvos(n))
        except StageFailure as e:
            e.relatorios = relatorios
            logger.error("Estágio falhou", estagio=n, error=str(e))
            raise
        except SuperficieMinimaError as e:
            logger.error("Estágio falhou", estagio=n, error=str(e))
            raise StageFailure(f"estágio {n}: {e}", relatorios=relatorios, diagnostico=e.contexto()) from e
        relatorios.append(relatorio)

    grade_final = sample_grid(tower[stages - 1], CONSTRUCAO["grade_radial"], CONSTRUCAO["grade_angular"])
    campo = integrate_immersion(Y, construtor.basepoint, grade_final)
    metrica = induced_metric(Y, grade_final)
    telescopio = integrate_immersion(Y, construtor.basepoint, grade_V1).sup_distancia(campo_V1)
    return ResultadoConstrucao(relatorios=relatorios, tripla=Y, campo=campo,
                               mudanca_acumulada=float(sum(r.sup_change for r in relatorios)),
                               lambda2_minimo=float(metrica.lambda2.min()), telescopio_V1=telescopio)


def run_exhaustion(prescription: HarmonicPrescription, tower: ExhaustionTower,
                   stages: int = CONSTRUCAO["estagios_padrao"],
                   seed: Optional[WeierstrassTriple] = None, grau: Optional[int] = None,
                   newton_max_iter: Optional[int] = None) -> ResultadoConstrucao:
    """
    Recursão com h prescrita: Y_1 é a semente e, para n >= 2, ε_n = 1/n² e
    alvo de distância n².

    φ3 nunca muda, logo a terceira coordenada de todo Y_n é h.
    """
    _validar_estagios(tower, stages)
    if prescription.primitiva is not None:
        verificar_compatibilidade(prescription)
    basepoint = ponto_base(tower[0])
    X = seed if seed is not None else semente(prescription, tower[0], newton_max_iter=newton_max_iter)
    construtor = ConstrutorCompletude(prescription, basepoint, grau=grau, newton_max_iter=newton_max_iter)
    logger.info("Iniciando recursão de exaustão", h=prescription.nome, estagios=stages)
    resultado = _recursao(construtor, X, tower, stages, lambda n: 1.0 / n ** 2, lambda n: float(n ** 2))
    logger.info("Recursão de exaustão concluída", **resultado.resumo())
    return resultado


def run_nonvanishing(p: Sequence[float], tower: ExhaustionTower, stages: int = 2,
                     eps: float = CONSTRUCAO["epsilon_nao_nulo"], compor: bool = False,
                     seed: Optional[WeierstrassTriple] = None, grau: Optional[int] = None,
                     newton_max_iter: Optional[int] = None) -> ResultadoConstrucao:
    """
    Recursão com φ3 = e^f·ψ sem zeros: Y_1 é a semente e cada Y_n aproxima
    Y_{n-1} em V_{n-1} com mudança abaixo de ε/n², sem alvo de distância.

    Verifica a deriva total contra επ²/6 e que ela não basta para tornar a
    terceira coordenada constante. Com `compor`, h = Re∫φ3 final alimenta
    run_exhaustion na mesma torre.
    """
    _validar_estagios(tower, stages)
    V1 = tower[0]
    fluxo = np.asarray(p, dtype=float)
    if seed is None:
        if not V1.e_disco:
            raise PreconditionError("semente padrão (φ3 = dz) só existe em torres de discos")
        seed = from_gauss_pair(GaussPair(u=LaurentPoly.zero(), eta3=ExpLaurent(LaurentPoly.zero(), 0)), V1)
    basepoint = ponto_base(V1)
    grade_V1 = _grade_regiao(V1)
    if np.min(np.abs(seed.phi3.avaliar(grade_V1.nodes))) <= TOLERANCIAS["zero_phi3"]:
        raise NonvanishingViolation("φ3 da semente se anula em V1",
                                    minimo=float(np.min(np.abs(seed.phi3.avaliar(grade_V1.nodes)))))

    prescricao = prescricao_de_forma(seed.phi3, fluxo, nome="nao-nulo")
    construtor = ConstrutorCompletude(prescricao, basepoint, nao_nulo=True, grau=grau,
                                      newton_max_iter=newton_max_iter)
    logger.info("Iniciando recursão com φ3 sem zeros", estagios=stages, epsilon=eps)
    resultado = _recursao(construtor, seed, tower, stages, lambda n: eps / n ** 2, lambda n: 0.0,
                          passo=construtor.estagio_nao_nulo)

    cota_deriva = eps * math.pi ** 2 / 6
    terceira = integrate_immersion(seed, basepoint, grade_V1).valores[2]
    oscilacao = float(terceira.max() - terceira.min())
    relatorio_gauss = gauss_map(resultado.tripla, resultado.campo.grid)
    resultado.extras.update({
        "cota_deriva": cota_deriva,
        "deriva_ok": resultado.mudanca_acumulada <= cota_deriva,
        "oscilacao_inicial": oscilacao,
        "nao_constante": oscilacao > 2 * cota_deriva,
        "gauss_sem_zeros_polos": relatorio_gauss.omite_zero_e_infinito,
        "min_phi3_final": min(r.min_phi3 for r in resultado.relatorios),
    })
    if compor:
        composta = prescricao_de_forma(resultado.tripla.phi3, fluxo)
        final = run_exhaustion(composta, tower, stages, grau=grau, newton_max_iter=newton_max_iter)
        gauss_final = gauss_map(final.tripla, final.campo.grid)
        resultado.extras.update({
            "composta_distancia_final": final.relatorios[-1].distance,
            "composta_aprovada": all(r.aprovado for r in final.relatorios),
            "composta_omite_antipodas": gauss_final.omite_zero_e_infinito,
        })
    logger.info("Recursão com φ3 sem zeros concluída", **resultado.resumo())
    return resultado
