"""
Configuração de execução e exportações: malhas OBJ, relatórios CSV e
JSON-lines, labirinto, distâncias e triplas serializadas.

A ordem das colunas e os campos obrigatórios vêm dos esquemas em schemas/.
Toda exportação é determinística para entradas idênticas.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from configuracao import APROXIMACAO, CONSTRUCAO, LIMITES_GRADE, VERSAO_CONFIG
from construcao import CATALOGO_H, HarmonicPrescription, StageReport, triple_from_harmonic
from dominio_plano import ExhaustionTower, Grid, make_exhaustion
from erros import ConfigError, DomainDegenerateError, ExportError
from labirinto import LabyrinthSpec
from nucleo_weierstrass import ImmersionField, WeierstrassTriple

logger = structlog.get_logger()

DIRETORIO_SCHEMAS = Path(__file__).resolve().parents[2] / "schemas"


def carregar_schema(nome: str) -> List[Dict]:
    with open(DIRETORIO_SCHEMAS / f"{nome}.json", encoding="utf-8") as f:
        return json.load(f)


def colunas(nome: str) -> List[str]:
    return [campo["name"] for campo in carregar_schema(nome)]


def _obrigatorios(nome: str) -> List[str]:
    return [campo["name"] for campo in carregar_schema(nome) if campo["mode"] == "REQUIRED"]


def _carregar_json(texto: str):
    try:
        return json.loads(texto)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, linha=e.lineno, coluna=e.colno) from e


# ---------------------------------------------------------------------------
# Configuração
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    spec_version: str
    tipo_torre: str
    h: str
    fluxo: Tuple[float, float, float]
    raios: Optional[Tuple[float, ...]] = None
    raio_interno: float = math.exp(-1)
    raio_externo: float = math.exp(1)
    coeficientes: Optional[Tuple[complex, ...]] = None
    k_min: int = 0
    grau: int = APROXIMACAO["grau_estagio"]
    estagios: int = CONSTRUCAO["estagios_padrao"]
    epsilon: float = CONSTRUCAO["epsilon_nao_nulo"]
    newton_max_iter: int = APROXIMACAO["newton_max_iter"]
    grade_radial: int = CONSTRUCAO["grade_radial"]
    grade_angular: int = CONSTRUCAO["grade_angular"]
    saida: Dict[str, str] = field(default_factory=dict)

    def torre(self) -> ExhaustionTower:
        return make_exhaustion(self.tipo_torre, self.estagios, raios=self.raios,
                               raio_interno=self.raio_interno, raio_externo=self.raio_externo)

    def prescricao(self) -> HarmonicPrescription:
        return triple_from_harmonic(self.h, self.fluxo, coeficientes=self.coeficientes, k_min=self.k_min)

    def to_dict(self) -> Dict:
        dominio: Dict = {"tipo": self.tipo_torre}
        if self.raios is not None:
            dominio["raios"] = list(self.raios)
        if self.tipo_torre in ("annulus-tower", "handle-tower"):
            dominio["raio_interno"] = self.raio_interno
            dominio["raio_externo"] = self.raio_externo
        prescricao: Dict = {"h": self.h}
        if self.coeficientes is not None:
            prescricao["coeficientes"] = [[c.real, c.imag] for c in self.coeficientes]
            prescricao["k_min"] = self.k_min
        return {
            "spec_version": self.spec_version,
            "dominio": dominio,
            "prescricao": prescricao,
            "fluxo": list(self.fluxo),
            "solver": {"grau": self.grau, "estagios": self.estagios, "epsilon": self.epsilon,
                       "newton_max_iter": self.newton_max_iter},
            "grade": {"radial": self.grade_radial, "angular": self.grade_angular},
            "saida": dict(self.saida),
        }


_CAMPOS_DOMINIO = {"tipo", "raios", "raio_interno", "raio_externo"}
_CAMPOS_PRESCRICAO = {"h", "coeficientes", "k_min"}
_CAMPOS_SOLVER = {"grau", "estagios", "epsilon", "newton_max_iter"}
_CAMPOS_GRADE = {"radial", "angular"}
_CAMPOS_SAIDA = {"malha", "relatorios_csv", "relatorios_jsonl", "tripla"}


def _secao(dados: Dict, nome: str, permitidos: set, obrigatoria: bool = False) -> Dict:
    valor = dados.get(nome)
    if valor is None:
        if obrigatoria:
            raise ConfigError("campo obrigatório ausente", campo=nome)
        return {}
    if not isinstance(valor, dict):
        raise ConfigError("esperado um objeto", campo=nome)
    desconhecidos = sorted(set(valor) - permitidos)
    if desconhecidos:
        raise ConfigError("campo desconhecido", campo=f"{nome}.{desconhecidos[0]}")
    return valor


def _numero(valor, campo: str, minimo: Optional[float] = None, maximo: Optional[float] = None,
            inteiro: bool = False):
    if isinstance(valor, bool) or not isinstance(valor, (int, float)):
        raise ConfigError("esperado um número", campo=campo)
    if inteiro and int(valor) != valor:
        raise ConfigError("esperado um inteiro", campo=campo)
    if (minimo is not None and valor < minimo) or (maximo is not None and valor > maximo):
        raise ConfigError(f"valor {valor} fora de [{minimo}, {maximo}]", campo=campo)
    return int(valor) if inteiro else float(valor)


def _coeficiente(valor, campo: str) -> complex:
    if isinstance(valor, (int, float)) and not isinstance(valor, bool):
        return complex(valor)
    if isinstance(valor, list) and len(valor) == 2:
        return complex(_numero(valor[0], campo), _numero(valor[1], campo))
    raise ConfigError("coeficiente deve ser número ou par [re, im]", campo=campo)


def parse_config(texto: str) -> RunConfig:
    """Valida o JSON de execução; erros citam o caminho do campo ou linha/coluna"""
    dados = _carregar_json(texto)
    if not isinstance(dados, dict):
        raise ConfigError("a configuração deve ser um objeto JSON", linha=1, coluna=1)

    permitidos = set(colunas("configuracao_execucao"))
    desconhecidos = sorted(set(dados) - permitidos)
    if desconhecidos:
        raise ConfigError("campo desconhecido", campo=desconhecidos[0])
    for nome in _obrigatorios("configuracao_execucao"):
        if nome not in dados:
            raise ConfigError("campo obrigatório ausente", campo=nome)
    if dados["spec_version"] != VERSAO_CONFIG:
        raise ConfigError(f"versão não suportada (esperado {VERSAO_CONFIG})", campo="spec_version")

    dominio = _secao(dados, "dominio", _CAMPOS_DOMINIO, obrigatoria=True)
    tipo = dominio.get("tipo")
    if tipo not in ("disk-tower", "annulus-tower", "handle-tower"):
        raise ConfigError(f"tipo de torre desconhecido: {tipo}", campo="dominio.tipo")
    raios = None
    if "raios" in dominio:
        if not isinstance(dominio["raios"], list):
            raise ConfigError("esperada uma lista", campo="dominio.raios")
        raios = tuple(_numero(r, f"dominio.raios[{k}]", minimo=0) for k, r in enumerate(dominio["raios"]))

    prescricao = _secao(dados, "prescricao", _CAMPOS_PRESCRICAO, obrigatoria=True)
    h = prescricao.get("h")
    if h not in CATALOGO_H:
        raise ConfigError(f"h desconhecida: {h} (catálogo: {', '.join(CATALOGO_H)})", campo="prescricao.h")
    if h == "log-abs" and tipo == "disk-tower":
        raise ConfigError("log|z| não é harmônica no disco; use annulus-tower", campo="prescricao.h")
    coeficientes = None
    if "coeficientes" in prescricao:
        if not isinstance(prescricao["coeficientes"], list):
            raise ConfigError("esperada uma lista", campo="prescricao.coeficientes")
        coeficientes = tuple(_coeficiente(c, f"prescricao.coeficientes[{k}]")
                             for k, c in enumerate(prescricao["coeficientes"]))

    if "fluxo" not in dados:
        raise ConfigError("campo obrigatório ausente", campo="fluxo")
    fluxo = dados["fluxo"]
    if not isinstance(fluxo, list) or len(fluxo) != 3:
        raise ConfigError("esperado vetor de 3 componentes", campo="fluxo")
    fluxo = tuple(_numero(v, f"fluxo[{k}]") for k, v in enumerate(fluxo))
    if tipo == "disk-tower" and any(fluxo):
        raise ConfigError("discos não têm ciclos: o fluxo deve ser nulo", campo="fluxo")

    solver = _secao(dados, "solver", _CAMPOS_SOLVER)
    grade = _secao(dados, "grade", _CAMPOS_GRADE)
    saida = _secao(dados, "saida", _CAMPOS_SAIDA)
    for chave, valor in saida.items():
        if not isinstance(valor, str):
            raise ConfigError("esperado um caminho", campo=f"saida.{chave}")

    config = RunConfig(
        spec_version=dados["spec_version"], tipo_torre=tipo, h=h, fluxo=fluxo, raios=raios,
        raio_interno=_numero(dominio.get("raio_interno", math.exp(-1)), "dominio.raio_interno", minimo=0),
        raio_externo=_numero(dominio.get("raio_externo", math.exp(1)), "dominio.raio_externo", minimo=0),
        coeficientes=coeficientes,
        k_min=_numero(prescricao.get("k_min", 0), "prescricao.k_min", inteiro=True),
        grau=_numero(solver.get("grau", APROXIMACAO["grau_estagio"]), "solver.grau",
                     minimo=1, maximo=APROXIMACAO["grau_maximo"], inteiro=True),
        estagios=_numero(solver.get("estagios", CONSTRUCAO["estagios_padrao"]), "solver.estagios",
                         minimo=1, maximo=CONSTRUCAO["estagios_maximo"], inteiro=True),
        epsilon=_numero(solver.get("epsilon", CONSTRUCAO["epsilon_nao_nulo"]), "solver.epsilon",
                        minimo=1e-12),
        newton_max_iter=_numero(solver.get("newton_max_iter", APROXIMACAO["newton_max_iter"]),
                                "solver.newton_max_iter", minimo=1, maximo=1000, inteiro=True),
        grade_radial=_numero(grade.get("radial", CONSTRUCAO["grade_radial"]), "grade.radial",
                             minimo=LIMITES_GRADE["radial_minimo"], inteiro=True),
        grade_angular=_numero(grade.get("angular", CONSTRUCAO["grade_angular"]), "grade.angular",
                              minimo=LIMITES_GRADE["angular_minimo"], inteiro=True),
        saida=dict(saida),
    )
    if config.grade_radial * config.grade_angular > LIMITES_GRADE["maximo_nos"]:
        raise ConfigError(f"grade excede {LIMITES_GRADE['maximo_nos']} nós", campo="grade")

    try:
        config.torre()
    except DomainDegenerateError as e:
        raise ConfigError(str(e), campo="dominio") from e
    if tipo == "disk-tower" and coeficientes is not None and config.k_min < 0:
        raise ConfigError("φ3 com potências negativas não é holomorfa no disco", campo="prescricao.k_min")
    config.prescricao()
    logger.debug("Configuração validada", h=h, torre=tipo, estagios=config.estagios)
    return config


def serializar_config(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Malha
# ---------------------------------------------------------------------------

def export_mesh(campo: ImmersionField, caminhos: Sequence[Sequence[int]] = ()) -> str:
    """
    OBJ com um vértice por nó e quadriláteros da grade com fechamento
    angular. Em discos o centro é um único vértice, ligado à primeira
    volta por um leque de triângulos. `caminhos` acrescenta linhas "l"
    (por exemplo, caminhos mínimos) com índices de nó da grade.
    """
    grid = campo.grid
    pontos = campo.valores.reshape(3, -1)
    finitos = np.all(np.isfinite(pontos), axis=0)
    if not np.all(finitos):
        no = int(np.nonzero(~finitos)[0][0])
        raise ExportError(f"coordenada não finita no nó {no}", no=no)

    na = grid.angular_count
    disco = grid.parent.e_disco
    primeiro = na - 1 if disco else 0

    def vertice(no: int) -> int:
        if disco and no < na:
            return 1
        return no - primeiro + 1

    linhas = [f"# superficie minima: {grid.radial_count}x{grid.angular_count} nos"]
    linhas += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in pontos[:, primeiro:].T]
    for i in range(grid.radial_count - 1):
        for j in range(na):
            a = vertice(i * na + j)
            b = vertice((i + 1) * na + j)
            c = vertice((i + 1) * na + (j + 1) % na)
            d = vertice(i * na + (j + 1) % na)
            linhas.append(f"f {a} {b} {c}" if disco and i == 0 else f"f {a} {b} {c} {d}")
    for caminho in caminhos:
        linhas.append("l " + " ".join(str(vertice(int(k))) for k in caminho))
    return "\n".join(linhas) + "\n"


# ---------------------------------------------------------------------------
# Relatórios
# ---------------------------------------------------------------------------

def export_reports(relatorios: Sequence[StageReport]) -> Tuple[str, str]:
    """CSV com colunas do esquema relatorio_estagio e espelho JSON-lines"""
    nomes = colunas("relatorio_estagio")
    saida_csv = io.StringIO()
    writer = csv.DictWriter(saida_csv, fieldnames=nomes, lineterminator="\n")
    writer.writeheader()
    for relatorio in relatorios:
        linha = relatorio.to_dict()
        writer.writerow({nome: linha[nome] for nome in nomes})
    jsonl = "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in relatorios)
    return saida_csv.getvalue(), jsonl


def ler_relatorios_csv(texto: str) -> List[Dict[str, float]]:
    leitor = csv.DictReader(io.StringIO(texto))
    return [{k: float(v) for k, v in linha.items()} for linha in leitor]


# ---------------------------------------------------------------------------
# Labirinto e distâncias
# ---------------------------------------------------------------------------

def exportar_labirinto(spec: LabyrinthSpec, grid: Grid) -> Tuple[str, str]:
    """JSON do labirinto e CSV de pertinência (banda de cada nó, 0 fora)"""
    texto_json = json.dumps(spec.to_dict(), indent=2, ensure_ascii=False)
    bandas = spec.banda_de(grid.nodes)
    saida = io.StringIO()
    writer = csv.writer(saida, lineterminator="\n")
    writer.writerow(["no", "i", "j", "re", "im", "banda"])
    na = grid.angular_count
    for k, (z, n) in enumerate(zip(grid.nodes, bandas)):
        writer.writerow([k, k // na, k % na, repr(float(z.real)), repr(float(z.imag)), int(n)])
    return texto_json, saida.getvalue()


def exportar_distancias(grid: Grid, distancias: np.ndarray) -> str:
    saida = io.StringIO()
    writer = csv.writer(saida, lineterminator="\n")
    writer.writerow(["no", "i", "j", "re", "im", "distancia"])
    na = grid.angular_count
    for k, (z, d) in enumerate(zip(grid.nodes, np.asarray(distancias).ravel())):
        writer.writerow([k, k // na, k % na, repr(float(z.real)), repr(float(z.imag)), repr(float(d))])
    return saida.getvalue()


def exportar_caminho(grid: Grid, caminho: Sequence[int]) -> str:
    """Poligonal do caminho mínimo no plano (re, im por nó)"""
    saida = io.StringIO()
    writer = csv.writer(saida, lineterminator="\n")
    writer.writerow(["no", "re", "im"])
    for k in caminho:
        z = grid.nodes[int(k)]
        writer.writerow([int(k), repr(float(z.real)), repr(float(z.imag))])
    return saida.getvalue()


# ---------------------------------------------------------------------------
# Triplas
# ---------------------------------------------------------------------------

def serializar_tripla(triple: WeierstrassTriple) -> str:
    return json.dumps(triple.to_dict(), indent=2, ensure_ascii=False)


def carregar_tripla(texto: str) -> WeierstrassTriple:
    dados = _carregar_json(texto)
    if not isinstance(dados, dict):
        raise ConfigError("a tripla deve ser um objeto JSON", linha=1, coluna=1)
    for nome in _obrigatorios("tripla_weierstrass"):
        if nome not in dados:
            raise ConfigError("campo obrigatório ausente", campo=nome)
    campo_forma = "componentes" if dados["forma"] == "laurent" else "par_gauss"
    if campo_forma not in dados:
        raise ConfigError(f"forma {dados['forma']} exige o campo", campo=campo_forma)
    return WeierstrassTriple.from_dict(dados)


def escrever(caminho: str, texto: str) -> None:
    destino = Path(caminho)
    destino.parent.mkdir(parents=True, exist_ok=True)
    with open(destino, "w", encoding="utf-8", newline="") as f:
        f.write(texto)
    logger.info("Arquivo exportado", caminho=str(destino), bytes=len(texto.encode("utf-8")))
