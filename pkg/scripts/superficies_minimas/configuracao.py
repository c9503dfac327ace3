"""
Configurações padrão do sistema de construção de superfícies mínimas.

Os valores podem ser sobrescritos pela configuração JSON de execução
(ver entrada_saida.parse_config) e, para os limites de grade, pela
variável de ambiente SUPERFICIES_MAX_GRID.
"""

import os

# Tolerâncias numéricas
TOLERANCIAS = {
    "isotropia": 1e-10,
    "periodo": 1e-9,
    "fluxo": 1e-6,
    "restricao_periodo": 1e-8,
    "integracao": 1e-8,
    "ramificacao": 1e-14,
    "membro_banda": 1e-12,
    "fronteira_arco": 1e-9,
    "zero_phi3": 1e-10,
}

# Quadratura
QUADRATURA = {
    "nos_ciclo": 4096,      # trapézio no círculo gerador
    "nos_gauss_legendre": 8,  # por segmento de grade
}

# Construção do labirinto
LABIRINTO = {
    "fator_mu": 0.9,
    "fator_M": 4,            # M = fator_M * N^4
    "recuo_subanel": 0.10,   # C_j recuado 10% de cada círculo de A_j
    "recuo_maximo": 0.40,
    "amostras_radiais_banda": 2,
    "amostras_angulares_banda": 48,
    "amostras_minimas_banda": 3,
}

# Motor de aproximação (Laurent)
APROXIMACAO = {
    "grau_maximo": 64,
    "graus_escalonados": (8, 16, 32, 64),
    "grau_estagio": 24,
    "peso_regiao": 10.0,
    "peso_labirinto": 1.0,
    "peso_arco": 10.0,
    "newton_max_iter": 50,
    "newton_amortecimento": 0.5,
    "newton_max_cortes": 10,
    "passo_jacobiano": 1e-7,
}

# Orquestração das recursões
CONSTRUCAO = {
    "estagios_padrao": 3,
    "estagios_maximo": 6,
    "escalonamentos_N": 4,
    "cortes_contracao": 30,
    "epsilon_nao_nulo": 0.5,
    "grade_radial": 33,
    "grade_angular": 64,
    "grade_regiao_radial": 12,
    "grade_regiao_angular": 48,
}

# Limites de grade
LIMITES_GRADE = {
    "radial_minimo": 2,
    "angular_minimo": 8,
    "maximo_nos": int(os.getenv("SUPERFICIES_MAX_GRID", "2000000")),
}

VERSAO_CONFIG = "1.0"
CONVENCAO = "dX=Re(phi)"
